#include "modbal/config.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace modbal {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": invalid JSON: " + e.what());
  }
}

// One JSON object with tracked key consumption; leftover keys are errors.
class Section {
 public:
  Section(const json& node, std::string path, std::string origin)
      : node_(node), path_(std::move(path)), origin_(std::move(origin)) {
    if (!node_.is_object()) throw ConfigError(origin_ + ": '" + where() + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    used_.insert(key);
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(origin_ + ": '" + name(key) + "' has the wrong type");
    }
  }

  std::optional<Section> child(const char* key) {
    const auto it = node_.find(key);
    if (it == node_.end()) return std::nullopt;
    used_.insert(key);
    return Section(*it, name(key), origin_);
  }

  const json* raw(const char* key) {
    const auto it = node_.find(key);
    if (it == node_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  void finish() const {
    for (const auto& item : node_.items())
      if (!used_.count(item.key())) throw ConfigError(origin_ + ": unknown key '" + name(item.key()) + "'");
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& origin() const { return origin_; }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json& node_;
  std::string path_;
  std::string origin_;
  std::set<std::string> used_;
};

template <typename Enum>
Enum parse_enum(Section& s, const char* key, Enum current, const std::vector<std::pair<std::string, Enum>>& table) {
  std::string text;
  for (const auto& [name, value] : table)
    if (value == current) text = name;
  s.get(key, text);
  for (const auto& [name, value] : table)
    if (name == text) return value;
  std::string allowed;
  for (const auto& entry : table) allowed += (allowed.empty() ? "" : ", ") + entry.first;
  throw ConfigError(s.origin() + ": '" + s.name(key) + "' = '" + text + "' is not one of " + allowed);
}

const std::vector<std::pair<std::string, DatasetSource>> kSources{{"synthetic", DatasetSource::synthetic},
                                                                  {"manifest", DatasetSource::manifest}};
const std::vector<std::pair<std::string, ReductionMethod>> kMethods{{"pca", ReductionMethod::pca},
                                                                    {"autoencoder", ReductionMethod::autoencoder}};
const std::vector<std::pair<std::string, DistillScope>> kScopes{{"train", DistillScope::train},
                                                                {"all", DistillScope::all}};
const std::vector<std::pair<std::string, QuantizerKind>> kQuantizers{
    {"own_predictions", QuantizerKind::own_predictions}, {"pc1_quantiles", QuantizerKind::pc1_quantiles}};
const std::vector<std::pair<std::string, LocalScale>> kScales{{"squared_distance", LocalScale::squared_distance},
                                                              {"distance", LocalScale::distance}};
const std::vector<std::pair<std::string, FusionKind>> kFusions{{"concatenation", FusionKind::concatenation}};

template <typename Enum>
std::string enum_name(Enum v, const std::vector<std::pair<std::string, Enum>>& table) {
  for (const auto& [name, value] : table)
    if (value == v) return name;
  return "?";
}

void read_synthetic(Section& s, SyntheticSpec& spec, std::optional<std::uint64_t>* seed) {
  if (seed) {
    if (const json* v = s.raw("seed")) {
      if (!v->is_number_unsigned()) throw ConfigError(s.origin() + ": '" + s.name("seed") + "' must be >= 0");
      *seed = v->get<std::uint64_t>();
    }
  } else {
    s.get("seed", spec.seed);
  }
  s.get("latent_dim", spec.latent_dim);
  s.get("class_counts", spec.class_counts);
  s.get("class_names", spec.class_names);
  if (const json* mods = s.raw("modalities")) {
    if (!mods->is_array()) throw ConfigError(s.origin() + ": '" + s.name("modalities") + "' must be an array");
    spec.modalities.clear();
    for (std::size_t i = 0; i < mods->size(); ++i) {
      Section m((*mods)[i], s.name("modalities") + "[" + std::to_string(i) + "]", s.origin());
      SyntheticModalitySpec ms;
      m.get("name", ms.name);
      m.get("dim", ms.dim);
      m.get("snr", ms.snr);
      m.get("margin", ms.margin);
      m.get("sharing", ms.sharing);
      m.finish();
      if (ms.name.empty()) throw ConfigError(s.origin() + ": " + m.name("name") + " is required");
      spec.modalities.push_back(ms);
    }
  }
  s.finish();
}

ojson synthetic_json(const SyntheticSpec& spec, std::optional<std::uint64_t> seed) {
  ojson j;
  if (seed) j["seed"] = *seed;
  j["latent_dim"] = spec.latent_dim;
  j["class_counts"] = spec.class_counts;
  j["class_names"] = spec.class_names;
  j["modalities"] = ojson::array();
  for (const auto& m : spec.modalities)
    j["modalities"].push_back({{"name", m.name}, {"dim", m.dim}, {"snr", m.snr}, {"margin", m.margin},
                               {"sharing", m.sharing}});
  return j;
}

ojson run_json(const RunConfig& c, bool with_output_dir) {
  ojson j;
  j["seed"] = c.seed;
  if (with_output_dir) j["output_dir"] = c.output_dir.string();
  ojson ds;
  ds["source"] = enum_name(c.dataset.source, kSources);
  if (c.dataset.source == DatasetSource::synthetic)
    ds["synthetic"] = synthetic_json(c.dataset.synthetic, c.dataset.synthetic_seed);
  else
    ds["manifest"] = c.dataset.manifest.string();
  j["dataset"] = ds;
  j["split"] = {{"fractions", c.split.fractions}, {"repeats", c.split.repeats}};
  j["reduction"] = {{"method", enum_name(c.reduction.method, kMethods)},
                    {"target_dim", c.reduction.target_dim},
                    {"standardize", c.standardize},
                    {"autoencoder",
                     {{"epochs", c.reduction.autoencoder.epochs},
                      {"relative_learning_rate", c.reduction.autoencoder.relative_learning_rate},
                      {"momentum", c.reduction.autoencoder.momentum}}}};
  j["snf"] = {{"mu", c.snf.mu},
              {"k_neighbors", c.snf.k_neighbors},
              {"iterations", c.snf.iterations},
              {"convergence_tol", c.snf.convergence_tol},
              {"local_scale", enum_name(c.snf.local_scale, kScales)},
              {"fuse_modalities", c.snf.fuse_modalities}};
  j["encoder"] = {{"layer_dims", c.encoder.layer_dims}, {"avg_edges_per_node", c.encoder.avg_edges_per_node}};
  j["optimizer"] = {{"learning_rate", c.optimizer.learning_rate},
                    {"momentum", c.optimizer.momentum},
                    {"epochs", c.optimizer.epochs},
                    {"weight_decay", c.optimizer.weight_decay}};
  j["distill"] = {{"alpha1", c.distill.alpha1},
                  {"alpha2", c.distill.alpha2},
                  {"alpha3", c.distill.alpha3},
                  {"epochs", c.distill.epochs},
                  {"learning_rate", c.distill.learning_rate},
                  {"momentum", c.distill.momentum},
                  {"temperature", c.distill.temperature},
                  {"mi_gate", c.distill.mi_gate},
                  {"scope", enum_name(c.distill.scope, kScopes)},
                  {"mi_quantizer",
                   {{"kind", enum_name(c.mi_quantizer.kind, kQuantizers)}, {"bins", c.mi_quantizer.bins}}}};
  j["balance"] = {{"alpha", c.balance.alpha},
                  {"beta", c.balance.beta},
                  {"gamma", c.balance.gamma},
                  {"reweight_interval", c.balance.reweight_interval},
                  {"fusion", enum_name(c.balance.fusion, kFusions)},
                  {"reweight", c.balance.reweight}};
  j["baseline"] = {{"learning_rate", c.baseline.learning_rate},
                   {"epochs", c.baseline.epochs},
                   {"l2", c.baseline.l2}};
  return j;
}

template <typename F>
void checked(const std::string& section, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(section + ": " + e.what());
  }
}

}  // namespace

SnfParams SnfConfig::resolve(Eigen::Index samples) const {
  SnfParams p = SnfParams::defaults_for(samples);
  p.mu = mu;
  if (k_neighbors > 0) p.k_neighbors = k_neighbors;
  p.iterations = iterations;
  p.convergence_tol = convergence_tol;
  p.local_scale = local_scale;
  p.validate(samples);
  return p;
}

SyntheticSpec RunConfig::resolved_synthetic() const {
  SyntheticSpec spec = dataset.synthetic;
  spec.seed = dataset.synthetic_seed.value_or(seed);
  return spec;
}

void RunConfig::validate() const {
  if (dataset.source == DatasetSource::synthetic)
    checked("dataset.synthetic", [&] { dataset.synthetic.validate(); });
  else if (dataset.manifest.empty())
    throw ConfigError("dataset.manifest is required when dataset.source is manifest");
  double total = 0.0;
  for (double f : split.fractions) {
    if (!(f > 0.0)) throw ConfigError("split.fractions must all be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split.fractions must sum to 1");
  if (split.repeats < 1) throw ConfigError("split.repeats must be >= 1");
  if (reduction.target_dim < 1) throw ConfigError("reduction.target_dim must be >= 1");
  if (reduction.autoencoder.epochs < 1 || !(reduction.autoencoder.relative_learning_rate > 0.0))
    throw ConfigError("reduction.autoencoder needs epochs >= 1 and a positive relative_learning_rate");
  if (!(snf.mu > 0.0) || snf.k_neighbors < 0 || snf.iterations < 1 || snf.convergence_tol < 0.0)
    throw ConfigError("snf: need mu > 0, k_neighbors >= 0, iterations >= 1, convergence_tol >= 0");
  if (encoder.layer_dims.empty()) throw ConfigError("encoder.layer_dims must not be empty");
  for (int d : encoder.layer_dims)
    if (d < 1) throw ConfigError("encoder.layer_dims entries must be >= 1");
  if (!(encoder.avg_edges_per_node >= 1.0)) throw ConfigError("encoder.avg_edges_per_node must be >= 1");
  checked("optimizer", [&] { optimizer.validate(); });
  checked("distill", [&] { distill.validate(); });
  if (mi_quantizer.bins < 2) throw ConfigError("distill.mi_quantizer.bins must be >= 2");
  checked("balance", [&] { balance.validate(); });
  checked("baseline", [&] { baseline.validate(); });
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  const json doc = parse_json(text, origin);
  RunConfig c;
  Section root(doc, "", origin);
  root.get("seed", c.seed);
  std::string out;
  root.get("output_dir", out);
  c.output_dir = out;

  if (auto ds = root.child("dataset")) {
    c.dataset.source = parse_enum(*ds, "source", c.dataset.source, kSources);
    if (auto syn = ds->child("synthetic")) read_synthetic(*syn, c.dataset.synthetic, &c.dataset.synthetic_seed);
    std::string manifest;
    ds->get("manifest", manifest);
    c.dataset.manifest = manifest;
    ds->finish();
  }
  if (auto s = root.child("split")) {
    s->get("fractions", c.split.fractions);
    s->get("repeats", c.split.repeats);
    s->finish();
  }
  if (auto s = root.child("reduction")) {
    c.reduction.method = parse_enum(*s, "method", c.reduction.method, kMethods);
    s->get("target_dim", c.reduction.target_dim);
    s->get("standardize", c.standardize);
    if (auto ae = s->child("autoencoder")) {
      ae->get("epochs", c.reduction.autoencoder.epochs);
      ae->get("relative_learning_rate", c.reduction.autoencoder.relative_learning_rate);
      ae->get("momentum", c.reduction.autoencoder.momentum);
      ae->finish();
    }
    s->finish();
  }
  if (auto s = root.child("snf")) {
    s->get("mu", c.snf.mu);
    s->get("k_neighbors", c.snf.k_neighbors);
    s->get("iterations", c.snf.iterations);
    s->get("convergence_tol", c.snf.convergence_tol);
    c.snf.local_scale = parse_enum(*s, "local_scale", c.snf.local_scale, kScales);
    s->get("fuse_modalities", c.snf.fuse_modalities);
    s->finish();
  }
  if (auto s = root.child("encoder")) {
    s->get("layer_dims", c.encoder.layer_dims);
    s->get("avg_edges_per_node", c.encoder.avg_edges_per_node);
    s->finish();
  }
  if (auto s = root.child("optimizer")) {
    s->get("learning_rate", c.optimizer.learning_rate);
    s->get("momentum", c.optimizer.momentum);
    s->get("epochs", c.optimizer.epochs);
    s->get("weight_decay", c.optimizer.weight_decay);
    s->finish();
  }
  if (auto s = root.child("distill")) {
    s->get("alpha1", c.distill.alpha1);
    s->get("alpha2", c.distill.alpha2);
    s->get("alpha3", c.distill.alpha3);
    s->get("epochs", c.distill.epochs);
    s->get("learning_rate", c.distill.learning_rate);
    s->get("momentum", c.distill.momentum);
    s->get("temperature", c.distill.temperature);
    s->get("mi_gate", c.distill.mi_gate);
    c.distill.scope = parse_enum(*s, "scope", c.distill.scope, kScopes);
    if (auto q = s->child("mi_quantizer")) {
      c.mi_quantizer.kind = parse_enum(*q, "kind", c.mi_quantizer.kind, kQuantizers);
      q->get("bins", c.mi_quantizer.bins);
      q->finish();
    }
    s->finish();
  }
  if (auto s = root.child("balance")) {
    s->get("alpha", c.balance.alpha);
    s->get("beta", c.balance.beta);
    s->get("gamma", c.balance.gamma);
    s->get("reweight_interval", c.balance.reweight_interval);
    c.balance.fusion = parse_enum(*s, "fusion", c.balance.fusion, kFusions);
    s->get("reweight", c.balance.reweight);
    s->finish();
  }
  if (auto s = root.child("baseline")) {
    s->get("learning_rate", c.baseline.learning_rate);
    s->get("epochs", c.baseline.epochs);
    s->get("l2", c.baseline.l2);
    s->finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c = parse_run_config(read_file(path), path.string());
  if (c.dataset.source == DatasetSource::manifest && c.dataset.manifest.is_relative())
    c.dataset.manifest = path.parent_path() / c.dataset.manifest;
  return c;
}

SyntheticSpec parse_synthetic_spec(const std::string& text, const std::string& origin) {
  const json doc = parse_json(text, origin);
  SyntheticSpec spec = RunConfig{}.dataset.synthetic;
  Section root(doc, "", origin);
  read_synthetic(root, spec, nullptr);
  checked(origin, [&] { spec.validate(); });
  return spec;
}

std::string dump_run_config(const RunConfig& config) { return run_json(config, true).dump(2) + "\n"; }

std::string dump_synthetic_spec(const SyntheticSpec& spec) {
  return synthetic_json(spec, spec.seed).dump(2) + "\n";
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& config) { return fnv1a_hex(run_json(config, false).dump()); }

ManifestEntry load_manifest(const std::filesystem::path& path) {
  const json doc = parse_json(read_file(path), path.string());
  Section root(doc, "", path.string());
  ManifestEntry m;
  std::string labels;
  root.get("labels", labels);
  root.get("class_names", m.class_names);
  const json* mods = root.raw("modalities");
  root.finish();
  if (!mods || !mods->is_array() || mods->empty())
    throw ConfigError(path.string() + ": 'modalities' must be a non-empty array");
  if (labels.empty()) throw ConfigError(path.string() + ": 'labels' is required");
  if (m.class_names.size() < 2) throw ConfigError(path.string() + ": 'class_names' needs at least 2 entries");
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_relative() ? base / fp : fp;
  };
  m.labels = resolve(labels);
  for (std::size_t i = 0; i < mods->size(); ++i) {
    Section s((*mods)[i], "modalities[" + std::to_string(i) + "]", path.string());
    std::string name, file;
    s.get("name", name);
    s.get("path", file);
    s.finish();
    if (name.empty() || file.empty()) throw ConfigError(path.string() + ": modalities need a name and a path");
    m.modalities.push_back({name, resolve(file)});
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const ManifestEntry& manifest) {
  ojson j;
  j["modalities"] = ojson::array();
  for (const auto& m : manifest.modalities) j["modalities"].push_back({{"name", m.name}, {"path", m.path.string()}});
  j["labels"] = manifest.labels.string();
  j["class_names"] = manifest.class_names;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace modbal
