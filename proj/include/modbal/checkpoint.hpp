#pragma once

// Self-describing binary container for model weights.
//
// Layout (little-endian): "MODBALCK", u32 version, u32 metadata count,
// (string key, string value)*, u32 tensor count, (string name, u64 rows,
// u64 cols, f64 row-major data)*. Strings are u32 length + bytes.

#include "modbal/balance.hpp"
#include "modbal/graph_encoder.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace modbal {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::map<std::string, Matrix> tensors;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  const std::string& meta(const std::string& key) const;
  const Matrix& tensor(const std::string& name) const;
};

void put_model(Checkpoint& ckpt, const std::string& prefix, const GcnModel& model);
GcnModel get_model(const Checkpoint& ckpt, const std::string& prefix);

void put_joint(Checkpoint& ckpt, const JointModel& model);
JointModel get_joint(const Checkpoint& ckpt);

}  // namespace modbal
