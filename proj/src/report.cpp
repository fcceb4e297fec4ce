#include "modbal/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>

namespace modbal {

namespace {

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void KeyValueReport::add(const std::string& key, const std::string& value) {
  if (key.find('=') != std::string::npos || value.find('\n') != std::string::npos)
    throw ContractError("report entry '" + key + "' cannot contain '=' in the key or a newline in the value");
  entries_.emplace_back(key, value);
}

void KeyValueReport::add(const std::string& key, double value) { add(key, format_double(value)); }
void KeyValueReport::add(const std::string& key, int value) { add(key, std::to_string(value)); }
void KeyValueReport::add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }

void KeyValueReport::add(const std::string& key, const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + format_double(values[i]);
  add(key, s);
}

std::string KeyValueReport::str() const {
  std::string s;
  for (const auto& [k, v] : entries_) s += k + "=" + v + "\n";
  return s;
}

void KeyValueReport::write(const std::filesystem::path& path) const { open_out(path) << str(); }

std::vector<std::pair<std::string, std::string>> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return out;
}

void CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size())
    throw ContractError("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(header_.size()));
  rows_.push_back(std::move(cells));
}

void CsvTable::write(const std::filesystem::path& path) const {
  auto out = open_out(path);
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_cell(cells[i]);
    out << "\n";
  };
  emit(header_);
  for (const auto& r : rows_) emit(r);
}

void write_heatmap_pgm(const std::filesystem::path& path, const Matrix& m, const std::vector<int>& order) {
  const auto n = m.rows();
  if (m.cols() != n || static_cast<Eigen::Index>(order.size()) != n)
    throw DimensionError("heatmap: need a square matrix and a full ordering");
  double top = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) top = std::max(top, m(i, j));
  auto out = open_out(path, true);
  out << "P5\n" << n << " " << n << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = top > 0.0 ? std::clamp(m(order[i], order[j]) / top, 0.0, 1.0) : 0.0;
      row[static_cast<std::size_t>(j)] = static_cast<unsigned char>(std::lround(255.0 * std::sqrt(v)));
    }
    out.write(reinterpret_cast<const char*>(row.data()), n);
  }
}

void write_bar_chart_ppm(const std::filesystem::path& path, const std::vector<std::vector<double>>& groups) {
  constexpr int kHeight = 200;
  constexpr int kBar = 16;
  constexpr int kGap = 12;
  static constexpr std::array<std::array<unsigned char, 3>, 6> kColors{
      {{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}, {148, 103, 189}, {140, 86, 75}}};
  std::size_t series = 0;
  for (const auto& g : groups) series = std::max(series, g.size());
  const int width = static_cast<int>(groups.size() * (series * kBar + kGap) + kGap);
  std::vector<unsigned char> pixels(static_cast<std::size_t>(width) * kHeight * 3, 255);
  int x = kGap;
  for (const auto& g : groups) {
    for (std::size_t s = 0; s < g.size(); ++s) {
      const int h = static_cast<int>(std::lround(std::clamp(g[s], 0.0, 1.0) * (kHeight - 1)));
      for (int y = kHeight - h; y < kHeight; ++y)
        for (int dx = 0; dx < kBar - 2; ++dx) {
          const auto idx = (static_cast<std::size_t>(y) * width + x + dx) * 3;
          for (int c = 0; c < 3; ++c) pixels[idx + c] = kColors[s % kColors.size()][c];
        }
      x += kBar;
    }
    x += static_cast<int>((series - g.size()) * kBar) + kGap;
  }
  auto out = open_out(path, true);
  out << "P6\n" << width << " " << kHeight << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

}  // namespace modbal
