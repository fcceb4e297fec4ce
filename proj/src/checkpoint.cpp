#include "modbal/checkpoint.hpp"

#include "modbal/report.hpp"

#include <cstring>
#include <fstream>

namespace modbal {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'D', 'B', 'A', 'L', 'C', 'K'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in, const std::string& what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("checkpoint truncated while reading " + what);
  return v;
}

std::string get_string(std::istream& in) {
  const auto len = get<std::uint32_t>(in, "string length");
  std::string s(len, '\0');
  if (!in.read(s.data(), len)) throw DataError("checkpoint truncated inside a string");
  return s;
}

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint32_t>(metadata.size()));
  for (const auto& [k, v] : metadata) {
    put_string(out, k);
    put_string(out, v);
  }
  put(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    put_string(out, name);
    put(out, static_cast<std::uint64_t>(m.rows()));
    put(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw DataError(path.string() + " is not a modbal checkpoint");
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  const auto n_meta = get<std::uint32_t>(in, "metadata count");
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = get_string(in);
    c.metadata[k] = get_string(in);
  }
  const auto n_tensors = get<std::uint32_t>(in, "tensor count");
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    auto name = get_string(in);
    const auto rows = get<std::uint64_t>(in, "rows");
    const auto cols = get<std::uint64_t>(in, "cols");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double))))
      throw DataError("checkpoint truncated inside tensor " + name);
    c.tensors.emplace(std::move(name), std::move(m));
  }
  return c;
}

const std::string& Checkpoint::meta(const std::string& key) const {
  const auto it = metadata.find(key);
  if (it == metadata.end()) throw DataError("checkpoint is missing metadata '" + key + "'");
  return it->second;
}

const Matrix& Checkpoint::tensor(const std::string& name) const {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw DataError("checkpoint is missing tensor '" + name + "'");
  return it->second;
}

void put_model(Checkpoint& ckpt, const std::string& prefix, const GcnModel& model) {
  ckpt.metadata[prefix + "layers"] = std::to_string(model.layer_weights.size());
  ckpt.metadata[prefix + "representation_dim"] = std::to_string(model.representation_dim);
  ckpt.metadata[prefix + "seed"] = std::to_string(model.seed);
  ckpt.metadata[prefix + "avg_edges_per_node"] = format_double(model.adjacency.avg_edges_per_node);
  ckpt.metadata[prefix + "epsilon"] = format_double(model.adjacency.epsilon);
  ckpt.metadata[prefix + "node_source"] = model.node_source;
  ckpt.metadata[prefix + "edge_source"] = model.edge_source;
  for (std::size_t l = 0; l < model.layer_weights.size(); ++l)
    ckpt.tensors[prefix + "layer" + std::to_string(l)] = model.layer_weights[l];
  ckpt.tensors[prefix + "head"] = model.head_weights;
  ckpt.tensors[prefix + "adjacency"] = model.normalized_adjacency;
}

GcnModel get_model(const Checkpoint& ckpt, const std::string& prefix) {
  GcnModel model;
  const int layers = std::stoi(ckpt.meta(prefix + "layers"));
  for (int l = 0; l < layers; ++l) model.layer_weights.push_back(ckpt.tensor(prefix + "layer" + std::to_string(l)));
  model.head_weights = ckpt.tensor(prefix + "head");
  model.normalized_adjacency = ckpt.tensor(prefix + "adjacency");
  model.representation_dim = std::stoi(ckpt.meta(prefix + "representation_dim"));
  model.seed = std::stoull(ckpt.meta(prefix + "seed"));
  model.adjacency.avg_edges_per_node = std::stod(ckpt.meta(prefix + "avg_edges_per_node"));
  model.adjacency.epsilon = std::stod(ckpt.meta(prefix + "epsilon"));
  model.node_source = ckpt.meta(prefix + "node_source");
  model.edge_source = ckpt.meta(prefix + "edge_source");
  for (std::size_t l = 1; l < model.layer_weights.size(); ++l)
    if (model.layer_weights[l].rows() != model.layer_weights[l - 1].cols())
      throw DataError("checkpoint " + prefix + ": layer dimensions do not chain");
  if (model.head_weights.rows() != model.representation_dim + 1)
    throw DataError("checkpoint " + prefix + ": head does not match the representation dim");
  return model;
}

void put_joint(Checkpoint& ckpt, const JointModel& model) {
  ckpt.metadata["joint.modalities"] = std::to_string(model.names.size());
  for (std::size_t m = 0; m < model.names.size(); ++m) {
    ckpt.metadata["joint.name" + std::to_string(m)] = model.names[m];
    put_model(ckpt, "joint.encoder" + std::to_string(m) + ".", model.encoders[m]);
  }
  ckpt.tensors["joint.fusion_head"] = model.fusion_head;
}

JointModel get_joint(const Checkpoint& ckpt) {
  JointModel model;
  const int count = std::stoi(ckpt.meta("joint.modalities"));
  for (int m = 0; m < count; ++m) {
    model.names.push_back(ckpt.meta("joint.name" + std::to_string(m)));
    model.encoders.push_back(get_model(ckpt, "joint.encoder" + std::to_string(m) + "."));
  }
  model.fusion_head = ckpt.tensor("joint.fusion_head");
  return model;
}

}  // namespace modbal
