#pragma once

// Run configuration: JSON in, validated structs out, unknown keys rejected.

#include "modbal/balance.hpp"
#include "modbal/baseline.hpp"
#include "modbal/dataset.hpp"
#include "modbal/distillation.hpp"
#include "modbal/reduction.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>

namespace modbal {

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class DatasetSource { synthetic, manifest };

struct DatasetConfig {
  DatasetSource source = DatasetSource::synthetic;
  SyntheticSpec synthetic = SyntheticSpec::strong_weak_low(200, 0);
  /// Generator seed; the run seed when unset.
  std::optional<std::uint64_t> synthetic_seed;
  /// JSON manifest listing per-modality CSVs, the labels CSV and class names.
  std::filesystem::path manifest;
};

struct SplitConfig {
  std::array<double, 3> fractions{0.6, 0.2, 0.2};
  int repeats = 10;
};

struct SnfConfig {
  double mu = 0.5;
  int k_neighbors = 0;  // 0 picks max(floor(N/10), 10)
  int iterations = 20;
  double convergence_tol = 1e-6;
  LocalScale local_scale = LocalScale::squared_distance;
  /// Modalities whose networks enter the fused edge network; empty means all.
  std::vector<std::string> fuse_modalities;

  SnfParams resolve(Eigen::Index samples) const;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  DatasetConfig dataset;
  SplitConfig split;
  ReductionConfig reduction;
  bool standardize = false;
  SnfConfig snf;
  EncoderConfig encoder;
  OptimizerConfig optimizer;
  DistillConfig distill;
  QuantizerConfig mi_quantizer;
  BalanceConfig balance;
  LogisticConfig baseline;

  /// Checks every nested section; throws ConfigError naming the section.
  void validate() const;
  SyntheticSpec resolved_synthetic() const;
};

/// Parses a JSON document; `origin` names the source in error messages.
/// Missing keys keep their defaults.
RunConfig parse_run_config(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::filesystem::path& path);

/// Stand-alone synthetic spec file (the `dataset.synthetic` schema).
SyntheticSpec parse_synthetic_spec(const std::string& text, const std::string& origin);

/// Fully defaulted config as pretty-printed JSON; stable key order.
std::string dump_run_config(const RunConfig& config);
std::string dump_synthetic_spec(const SyntheticSpec& spec);

/// FNV-1a 64-bit over the resolved dump, as 16 hex digits.
std::string config_hash(const RunConfig& config);
std::string fnv1a_hex(const std::string& bytes);

struct ManifestEntry {
  std::vector<ModalitySource> modalities;
  std::filesystem::path labels;
  std::vector<std::string> class_names;
};

/// Relative paths resolve against the manifest's directory.
ManifestEntry load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const ManifestEntry& manifest);

}  // namespace modbal
