#pragma once

#include "modbal/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace modbal::cli {

/// Bad flags or an unusable config; exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  bool plots = false;
};

/// Loads the config (or defaults), applies --seed and resolves the run
/// directory: --out, then the config's output_dir, then
/// $MODBAL_OUT_ROOT (default "runs") / <config hash>.
struct RunContext {
  RunConfig config;
  std::filesystem::path dir;
  std::string hash;
  bool plots = false;
};

RunContext open_run(const CommonOptions& options, const std::string& command);

void cmd_generate(const CommonOptions& options, const std::string& spec_path);
void cmd_baseline(const CommonOptions& options);
void cmd_fuse(const CommonOptions& options);
void cmd_train_unimodal(const CommonOptions& options, const std::string& modality, const std::string& edges);
void cmd_distill(const CommonOptions& options);
void cmd_train_balanced(const CommonOptions& options);
void cmd_evaluate(const CommonOptions& options, const std::string& checkpoint);

}  // namespace modbal::cli
