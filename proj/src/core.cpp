#include "modbal/core.hpp"

#include <cmath>

namespace modbal {

std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Rng Rng::derive(std::uint64_t tag) const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return Rng((static_cast<std::uint64_t>(out[1]) << 32) | out[0]);
}

Rng Rng::derive(const std::string& tag) const {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : tag) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return derive(h);
}

Rows mask_rows(const std::vector<bool>& mask) {
  Rows rows;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) rows.push_back(static_cast<int>(i));
  return rows;
}

int argmax_row(const Matrix& m, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c)
    if (m(row, c) > m(row, best)) best = c;
  return static_cast<int>(best);
}

Labels argmax_rows(const Matrix& m) {
  Labels out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = argmax_row(m, r);
  return out;
}

Matrix xavier_uniform(int fan_in, int fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (int i = 0; i < fan_in; ++i)
    for (int j = 0; j < fan_out; ++j) w(i, j) = rng.uniform(-a, a);
  return w;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace modbal
