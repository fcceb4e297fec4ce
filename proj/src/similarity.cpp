#include "modbal/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace modbal {

namespace {

constexpr double kScaleFloor = 1e-12;

// Shared by normalize_P and the per-iteration renormalization.
Matrix half_normalize(const Matrix& w) {
  const auto n = w.rows();
  Matrix p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) off += w(i, j);
    if (!(off > 0.0))
      throw ContractError("normalize_P: sample " + std::to_string(i) + " has no off-diagonal similarity mass");
    p.row(i) = w.row(i) / (2.0 * off);
    p(i, i) = 0.5;
  }
  return p;
}

// Indices j != i ordered by `better(i, j, k)`; stable so lower index wins ties.
template <typename Better>
std::vector<int> ranked_neighbors(Eigen::Index n, Eigen::Index i, Better better) {
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(n - 1));
  for (Eigen::Index j = 0; j < n; ++j)
    if (j != i) idx.push_back(static_cast<int>(j));
  std::stable_sort(idx.begin(), idx.end(), better);
  return idx;
}

void require_square(const SimilarityNetwork& s, const char* op) {
  if (s.matrix.rows() != s.matrix.cols())
    throw DimensionError(std::string(op) + ": network must be square, got " + shape_string(s.matrix));
}

}  // namespace

SnfParams SnfParams::defaults_for(Eigen::Index samples) {
  SnfParams p;
  p.k_neighbors = static_cast<int>(std::max<Eigen::Index>(samples / 10, 10));
  if (samples >= 2) p.k_neighbors = static_cast<int>(std::min<Eigen::Index>(p.k_neighbors, samples - 1));
  return p;
}

void SnfParams::validate(Eigen::Index samples) const {
  if (!(mu > 0.0)) throw ContractError("SnfParams: mu must be positive");
  if (k_neighbors < 1 || k_neighbors >= samples)
    throw ContractError("SnfParams: k_neighbors = " + std::to_string(k_neighbors) + " must lie in [1, " +
                        std::to_string(samples) + ")");
  if (iterations < 1) throw ContractError("SnfParams: iterations must be >= 1");
  if (convergence_tol < 0.0) throw ContractError("SnfParams: convergence_tol must be >= 0");
}

std::string to_string(LocalScale s) { return s == LocalScale::distance ? "distance" : "squared_distance"; }

LocalScale parse_local_scale(const std::string& s) {
  if (s == "squared_distance") return LocalScale::squared_distance;
  if (s == "distance") return LocalScale::distance;
  throw ContractError("unknown local scale '" + s + "' (expected squared_distance or distance)");
}

std::string to_string(NetworkKind kind) {
  switch (kind) {
    case NetworkKind::raw_W: return "raw_W";
    case NetworkKind::normalized_P: return "normalized_P";
    case NetworkKind::knn_S: return "knn_S";
    case NetworkKind::fused: return "fused";
  }
  return "unknown";
}

SimilarityNetwork scaled_exponential_similarity(const ModalityMatrix& x, const SnfParams& params) {
  const auto n = x.samples();
  if (n < 2) throw ContractError("scaled_exponential_similarity: need at least 2 samples");
  params.validate(n);

  const bool squared = params.local_scale == LocalScale::squared_distance;
  Matrix dist = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (x.values.row(i) - x.values.row(j)).norm();
      dist(i, j) = d;
      dist(j, i) = d;
    }

  Vector local(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto nb = ranked_neighbors(n, i, [&](int a, int b) { return dist(i, a) < dist(i, b); });
    double total = 0.0;
    for (int k = 0; k < params.k_neighbors; ++k) {
      const double d = dist(i, nb[static_cast<std::size_t>(k)]);
      total += squared ? d * d : d;
    }
    local(i) = total / params.k_neighbors;
  }

  SimilarityNetwork out;
  out.kind = NetworkKind::raw_W;
  out.matrix.resize(n, n);
  std::size_t floored = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.matrix(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = dist(i, j) * dist(i, j);
      double scale = (local(i) + local(j) + (squared ? d2 : dist(i, j))) / 3.0;
      if (scale < kScaleFloor) {
        scale = kScaleFloor;
        ++floored;
      }
      const double w = std::exp(-d2 / (params.mu * scale));
      out.matrix(i, j) = w;
      out.matrix(j, i) = w;
    }
  }
  if (floored > 0)
    out.warnings.push_back("local scale floored at 1e-12 for " + std::to_string(floored) +
                           " sample pairs (duplicate points)");
  return out;
}

SimilarityNetwork normalize_P(const SimilarityNetwork& w) {
  require_square(w, "normalize_P");
  if ((w.matrix.array() < 0.0).any()) throw ContractError("normalize_P: negative similarity");
  SimilarityNetwork out;
  out.kind = NetworkKind::normalized_P;
  out.matrix = half_normalize(w.matrix);
  return out;
}

SimilarityNetwork knn_S(const SimilarityNetwork& w, int k) {
  require_square(w, "knn_S");
  const auto n = w.size();
  if (k < 1 || k >= n)
    throw ContractError("knn_S: k = " + std::to_string(k) + " must lie in [1, " + std::to_string(n) + ")");

  SimilarityNetwork out;
  out.kind = NetworkKind::knn_S;
  out.matrix = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto nb = ranked_neighbors(n, i, [&](int a, int b) { return w.matrix(i, a) > w.matrix(i, b); });
    double total = 0.0;
    for (int r = 0; r < k; ++r) total += w.matrix(i, nb[static_cast<std::size_t>(r)]);
    if (!(total > 0.0))
      throw ContractError("knn_S: sample " + std::to_string(i) + " has no similarity mass among its neighbors");
    for (int r = 0; r < k; ++r) {
      const int j = nb[static_cast<std::size_t>(r)];
      out.matrix(i, j) = w.matrix(i, j) / total;
    }
  }
  return out;
}

FusionResult snf_fuse(const std::vector<SimilarityNetwork>& networks, const SnfParams& params) {
  if (networks.size() < 2) throw ContractError("snf_fuse: need at least 2 networks");
  const auto n = networks.front().size();
  for (std::size_t m = 0; m < networks.size(); ++m) {
    require_square(networks[m], "snf_fuse");
    if (networks[m].size() != n)
      throw DimensionError("snf_fuse: network 0 has " + std::to_string(n) + " samples but network " +
                           std::to_string(m) + " has " + std::to_string(networks[m].size()));
  }
  params.validate(n);

  const std::size_t count = networks.size();
  std::vector<Matrix> local(count);
  std::vector<Matrix> status(count);
  for (std::size_t m = 0; m < count; ++m) {
    local[m] = knn_S(networks[m], params.k_neighbors).matrix;
    status[m] = normalize_P(networks[m]).matrix;
  }

  FusionResult result;
  std::vector<Matrix> next(count);
  for (int t = 0; t < params.iterations; ++t) {
    Matrix total = Matrix::Zero(n, n);
    for (const auto& p : status) total += p;
    for (std::size_t m = 0; m < count; ++m) {
      const Matrix others = (total - status[m]) / static_cast<double>(count - 1);
      next[m].noalias() = local[m] * others * local[m].transpose();
    }
    double change = 0.0;
    for (std::size_t m = 0; m < count; ++m) {
      Matrix p = half_normalize(next[m]);
      next[m] = (p + p.transpose()) / 2.0;
      change = std::max(change, (next[m] - status[m]).norm() / status[m].norm());
    }
    std::swap(status, next);
    result.relative_change.push_back(change);
    result.iterations_run = t + 1;
    if (change < params.convergence_tol) {
      result.converged = true;
      break;
    }
  }

  result.network.kind = NetworkKind::fused;
  result.network.matrix = Matrix::Zero(n, n);
  for (const auto& p : status) result.network.matrix += p;
  result.network.matrix /= static_cast<double>(count);
  if (!result.converged)
    result.network.warnings.push_back("fusion stopped at the iteration limit; last relative change " +
                                      std::to_string(result.relative_change.back()));
  return result;
}

double mean_within_class_similarity(const Matrix& s, const Labels& labels) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      if (i != j && labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
        total += s(i, j);
        ++pairs;
      }
  return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

}  // namespace modbal
