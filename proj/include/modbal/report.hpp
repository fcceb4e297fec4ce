#pragma once

// Plain-text reports and simple image output.

#include "modbal/core.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace modbal {

/// Ordered `key=value` lines. Doubles use %.17g so reports round-trip.
class KeyValueReport {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, const char* value) { add(key, std::string(value)); }
  void add(const std::string& key, double value);
  void add(const std::string& key, int value);
  void add(const std::string& key, std::uint64_t value);
  void add(const std::string& key, const std::vector<double>& values);

  std::string str() const;
  void write(const std::filesystem::path& path) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Parses a file written by KeyValueReport::write.
std::vector<std::pair<std::string, std::string>> read_key_values(const std::filesystem::path& path);

std::string format_double(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(std::vector<std::string> cells);
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Grayscale heatmap (binary PGM) with values scaled to the largest
/// off-diagonal entry; brighter is more similar. `order` permutes rows and
/// columns, e.g. to group samples by class.
void write_heatmap_pgm(const std::filesystem::path& path, const Matrix& m, const std::vector<int>& order);

/// Grouped bar chart (binary PPM): one group per entry of `groups`, one
/// colored bar per series, heights in [0, 1].
void write_bar_chart_ppm(const std::filesystem::path& path, const std::vector<std::vector<double>>& groups);

}  // namespace modbal
