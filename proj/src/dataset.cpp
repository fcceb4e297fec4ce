#include "modbal/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace modbal {

namespace {

std::string trim(std::string s) {
  const auto strip = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '"'; };
  while (!s.empty() && strip(s.back())) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && strip(s[start])) ++start;
  return s.substr(start);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
};

CsvTable read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  t.header = split_line(line);
  if (t.header.size() < 2) throw DataError(path.string() + ": need an ID column and at least one feature");
  std::size_t row = 1;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size())
      throw DataError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(t.header.size()));
    if (!seen.insert(cells[0]).second)
      throw DataError(path.string() + ": duplicate sample ID '" + cells[0] + "' at row " + std::to_string(row));
    std::vector<double> values(cells.size() - 1);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto& cell = cells[c];
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw DataError(path.string() + ": non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                        ", column " + std::to_string(c + 1));
      values[c - 1] = v;
    }
    t.ids.push_back(cells[0]);
    t.rows.push_back(std::move(values));
  }
  return t;
}

}  // namespace

std::size_t MultiOmicsDataset::modality_index(const std::string& name) const {
  for (std::size_t m = 0; m < modalities.size(); ++m)
    if (modalities[m].name == name) return m;
  throw DataError("unknown modality '" + name + "'");
}

void MultiOmicsDataset::validate() const {
  if (modalities.empty()) throw DataError("dataset has no modalities");
  if (sample_ids.size() != labels.size()) throw DataError("dataset: sample IDs and labels differ in length");
  for (const auto& m : modalities)
    if (m.samples() != samples())
      throw DataError("dataset: modality " + m.name + " has " + std::to_string(m.samples()) + " samples, expected " +
                      std::to_string(samples()));
  std::vector<int> counts(class_names.size(), 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes()) throw DataError("dataset: label " + std::to_string(y) + " out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] == 0) throw DataError("dataset: class " + class_names[c] + " has no samples");
}

MultiOmicsDataset load_csv_dataset(const std::vector<ModalitySource>& sources, const std::filesystem::path& labels_path,
                                   const std::vector<std::string>& class_names) {
  if (sources.empty()) throw DataError("load_csv_dataset: no modality files");
  if (class_names.size() < 2) throw DataError("load_csv_dataset: need at least 2 class names");

  std::vector<CsvTable> tables;
  for (const auto& s : sources) tables.push_back(read_numeric_csv(s.path));

  std::map<std::string, int> label_of;
  {
    std::ifstream in(labels_path);
    if (!in) throw DataError("cannot open " + labels_path.string());
    std::string line;
    std::getline(in, line);
    std::size_t row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (trim(line).empty()) continue;
      const auto cells = split_line(line);
      if (cells.size() != 2) throw DataError(labels_path.string() + ": row " + std::to_string(row) + " needs 2 cells");
      int label = -1;
      const auto named = std::find(class_names.begin(), class_names.end(), cells[1]);
      if (named != class_names.end()) {
        label = static_cast<int>(named - class_names.begin());
      } else {
        const auto res = std::from_chars(cells[1].data(), cells[1].data() + cells[1].size(), label);
        if (res.ec != std::errc() || res.ptr != cells[1].data() + cells[1].size() || label < 0 ||
            label >= static_cast<int>(class_names.size()))
          throw DataError(labels_path.string() + ": unknown label '" + cells[1] + "' at row " + std::to_string(row));
      }
      label_of[cells[0]] = label;
    }
  }

  std::set<std::string> common;
  for (const auto& [id, _] : label_of) common.insert(id);
  std::set<std::string> all_ids(common);
  for (const auto& t : tables) {
    std::set<std::string> ids(t.ids.begin(), t.ids.end());
    all_ids.insert(ids.begin(), ids.end());
    std::set<std::string> kept;
    std::set_intersection(common.begin(), common.end(), ids.begin(), ids.end(), std::inserter(kept, kept.end()));
    common = std::move(kept);
  }
  if (common.empty()) throw DataError("load_csv_dataset: no sample appears in every file");

  MultiOmicsDataset ds;
  ds.class_names = class_names;
  ds.sample_ids.assign(common.begin(), common.end());
  for (const auto& id : ds.sample_ids) ds.labels.push_back(label_of.at(id));
  const auto dropped = all_ids.size() - common.size();
  if (dropped > 0)
    ds.warnings.push_back("dropped " + std::to_string(dropped) + " samples missing from at least one file");

  for (std::size_t m = 0; m < tables.size(); ++m) {
    const auto& t = tables[m];
    std::map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < t.ids.size(); ++i) where[t.ids[i]] = i;
    ModalityMatrix mod;
    mod.name = sources[m].name;
    mod.feature_names.assign(t.header.begin() + 1, t.header.end());
    mod.values.resize(static_cast<Eigen::Index>(common.size()), static_cast<Eigen::Index>(t.header.size() - 1));
    for (std::size_t i = 0; i < ds.sample_ids.size(); ++i) {
      const auto& src = t.rows[where.at(ds.sample_ids[i])];
      for (std::size_t c = 0; c < src.size(); ++c)
        mod.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = src[c];
    }
    ds.modalities.push_back(std::move(mod));
  }
  ds.validate();
  return ds;
}

void write_modality_csv(const std::filesystem::path& path, const ModalityMatrix& m,
                        const std::vector<std::string>& sample_ids) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "sample_id";
  for (Eigen::Index c = 0; c < m.features(); ++c) {
    out << ',';
    if (static_cast<std::size_t>(c) < m.feature_names.size())
      out << m.feature_names[static_cast<std::size_t>(c)];
    else
      out << m.name << "_f" << c;
  }
  out << '\n';
  char buf[32];
  for (Eigen::Index r = 0; r < m.samples(); ++r) {
    out << sample_ids[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.features(); ++c) {
      const auto res = std::to_chars(buf, buf + sizeof buf, m.values(r, c));
      out << ',';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

void write_labels_csv(const std::filesystem::path& path, const MultiOmicsDataset& ds) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "sample_id,label\n";
  for (std::size_t i = 0; i < ds.sample_ids.size(); ++i)
    out << ds.sample_ids[i] << ',' << ds.class_names[static_cast<std::size_t>(ds.labels[i])] << '\n';
}

SyntheticSpec SyntheticSpec::brca_shaped() {
  SyntheticSpec spec = strong_weak_low(100, 0);
  spec.modalities[0].dim = 19580;
  spec.modalities[1].dim = 19273;
  spec.modalities[2].dim = 223;
  return spec;
}

SyntheticSpec SyntheticSpec::strong_weak_low(int dim, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.modalities = {
      {"mRNA", dim, 0.15, 1.0, 0.6},
      {"CNV", dim, 0.03, 1.0, 0.0},
      {"RPPA", dim, 0.6, 1.0, 0.6},
  };
  return spec;
}

void SyntheticSpec::validate() const {
  if (modalities.empty()) throw DataError("synthetic spec: no modalities");
  if (class_counts.size() < 2) throw DataError("synthetic spec: need at least 2 classes");
  if (class_names.size() != class_counts.size())
    throw DataError("synthetic spec: class_names and class_counts differ in length");
  for (int c : class_counts)
    if (c < 3) throw DataError("synthetic spec: every class needs at least 3 samples");
  if (latent_dim < 1) throw DataError("synthetic spec: latent_dim must be >= 1");
  std::set<std::string> names;
  for (const auto& m : modalities) {
    if (m.dim < 1) throw DataError("synthetic spec: modality " + m.name + " needs dim >= 1");
    if (m.snr < 0.0 || m.margin < 0.0) throw DataError("synthetic spec: snr and margin must be >= 0");
    if (m.sharing < 0.0 || m.sharing > 1.0) throw DataError("synthetic spec: sharing must lie in [0, 1]");
    if (!names.insert(m.name).second) throw DataError("synthetic spec: duplicate modality " + m.name);
  }
}

MultiOmicsDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Rng root(spec.seed);
  const int latent = spec.latent_dim;
  const int classes = static_cast<int>(spec.class_counts.size());

  MultiOmicsDataset ds;
  ds.class_names = spec.class_names;
  for (int c = 0; c < classes; ++c) ds.labels.insert(ds.labels.end(), spec.class_counts[static_cast<std::size_t>(c)], c);
  Rng order = root.derive(1);
  order.shuffle(ds.labels.begin(), ds.labels.end());
  const auto n = static_cast<Eigen::Index>(ds.labels.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    char id[24];
    std::snprintf(id, sizeof id, "S%04ld", static_cast<long>(i + 1));
    ds.sample_ids.emplace_back(id);
  }

  const auto gaussian = [](Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
  };

  Rng shared_rng = root.derive(2);
  const Matrix shared_centers = gaussian(shared_rng, classes, latent);
  const Matrix shared_spread = gaussian(shared_rng, n, latent);

  for (std::size_t m = 0; m < spec.modalities.size(); ++m) {
    const auto& ms = spec.modalities[m];
    Rng rng = root.derive(100 + m);
    const Matrix private_centers = gaussian(rng, classes, latent);
    const Matrix private_spread = gaussian(rng, n, latent);
    const Matrix mixing = gaussian(rng, latent, ms.dim) / std::sqrt(static_cast<double>(latent));
    const Matrix offset = gaussian(rng, 1, ms.dim);
    const Matrix noise = gaussian(rng, n, ms.dim);

    Matrix z(n, latent);
    const double ws = std::sqrt(ms.sharing);
    const double wp = std::sqrt(1.0 - ms.sharing);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int y = ds.labels[static_cast<std::size_t>(i)];
      z.row(i) = ws * (ms.margin * shared_centers.row(y) + shared_spread.row(i)) +
                 wp * (ms.margin * private_centers.row(y) + private_spread.row(i));
    }
    ModalityMatrix mod;
    mod.name = ms.name;
    mod.values = ms.snr * (z * mixing) + noise;
    mod.values.rowwise() += offset.row(0);
    for (int f = 0; f < ms.dim; ++f) mod.feature_names.push_back(ms.name + "_f" + std::to_string(f + 1));
    ds.modalities.push_back(std::move(mod));
  }
  ds.validate();
  return ds;
}

SplitMasks stratified_split(const Labels& labels, const std::array<double, 3>& fractions, Rng& rng) {
  for (double f : fractions)
    if (!(f > 0.0)) throw ContractError("stratified_split: fractions must be positive");
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
    throw ContractError("stratified_split: fractions must sum to 1");
  const int classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;

  SplitMasks masks;
  masks.train.assign(labels.size(), false);
  masks.val.assign(labels.size(), false);
  masks.test.assign(labels.size(), false);
  for (int c = 0; c < classes; ++c) {
    std::vector<int> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) members.push_back(static_cast<int>(i));
    if (members.empty()) continue;
    if (members.size() < 3)
      throw ContractError("stratified_split: class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                          " samples; every split needs one");
    rng.shuffle(members.begin(), members.end());
    const auto n = static_cast<double>(members.size());
    const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fractions[1] * n)));
    const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fractions[2] * n)));
    if (n_val + n_test >= members.size())
      throw ContractError("stratified_split: class " + std::to_string(c) + " too small for the requested fractions");
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto i = static_cast<std::size_t>(members[k]);
      if (k < n_val)
        masks.val[i] = true;
      else if (k < n_val + n_test)
        masks.test[i] = true;
      else
        masks.train[i] = true;
    }
  }
  return masks;
}

}  // namespace modbal
