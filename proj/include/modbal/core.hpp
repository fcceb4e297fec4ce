#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace modbal {

/// Dense double-precision matrix with row-major storage.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Class index per sample, in [0, C).
using Labels = std::vector<int>;

/// Row indices selected by a mask, ascending.
using Rows = std::vector<int>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition of the called operation was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data or configuration.
class DataError : public Error {
 public:
  using Error::Error;
};

std::string shape_string(const Matrix& m);

/// Seeded pseudo-random stream. Identical seeds give identical streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  double uniform(double lo, double hi) {
    ++draws_;
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() {
    ++draws_;
    return normal_(engine_);
  }
  std::uint64_t next() {
    ++draws_;
    return engine_();
  }
  template <typename It>
  void shuffle(It first, It last) {
    ++draws_;
    std::shuffle(first, last, engine_);
  }

  /// Independent child stream keyed by `tag`; does not advance this stream.
  Rng derive(std::uint64_t tag) const;
  Rng derive(const std::string& tag) const;

 private:
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

Rows mask_rows(const std::vector<bool>& mask);
int argmax_row(const Matrix& m, Eigen::Index row);
Labels argmax_rows(const Matrix& m);

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Matrix xavier_uniform(int fan_in, int fan_out, Rng& rng);

bool all_finite(const Matrix& m);

}  // namespace modbal
