#pragma once

// Per-modality sample-similarity networks and Similarity Network Fusion.

#include "modbal/modality.hpp"

#include <string>
#include <vector>

namespace modbal {

/// Units of the local scale eps_ij. With squared distances the kernel is
/// invariant to rescaling the features; plain distances follow the printed
/// kernel literally and underflow on wide, unscaled data.
enum class LocalScale { squared_distance, distance };
std::string to_string(LocalScale s);
LocalScale parse_local_scale(const std::string& s);

struct SnfParams {
  double mu = 0.5;
  int k_neighbors = 10;
  int iterations = 20;
  double convergence_tol = 1e-6;
  LocalScale local_scale = LocalScale::squared_distance;

  /// mu = 0.5, K = max(floor(N/10), 10) capped at N-1, 20 iterations, tol 1e-6.
  static SnfParams defaults_for(Eigen::Index samples);
  void validate(Eigen::Index samples) const;
};

enum class NetworkKind { raw_W, normalized_P, knn_S, fused };
std::string to_string(NetworkKind kind);

struct SimilarityNetwork {
  NetworkKind kind = NetworkKind::raw_W;
  Matrix matrix;
  std::vector<std::string> warnings;

  Eigen::Index size() const { return matrix.rows(); }
};

struct FusionResult {
  SimilarityNetwork network;
  int iterations_run = 0;
  bool converged = false;
  /// max over modalities of ||P_{t+1} - P_t||_F / ||P_t||_F, one entry per iteration.
  std::vector<double> relative_change;
};

/// W(i,j) = exp(-rho^2 / (mu * eps_ij)) with
/// eps_ij = (mean_{k in N_i} D(i,k) + mean_{k in N_j} D(j,k) + D(i,j)) / 3,
/// N_i the K nearest samples to i by Euclidean distance rho, and D = rho^2 or
/// rho depending on `local_scale`.
SimilarityNetwork scaled_exponential_similarity(const ModalityMatrix& x, const SnfParams& params);

/// P(i,j) = W(i,j) / (2 sum_{k != i} W(i,k)) off the diagonal, P(i,i) = 1/2.
SimilarityNetwork normalize_P(const SimilarityNetwork& w);

/// Row i keeps its k largest off-diagonal entries (lower index wins ties),
/// renormalized to sum to one.
SimilarityNetwork knn_S(const SimilarityNetwork& w, int k);

/// Cross-diffusion of per-modality networks. Each status matrix diffuses
/// against the mean of the others, then is renormalized and symmetrized.
/// Returns the elementwise mean of the final status matrices.
FusionResult snf_fuse(const std::vector<SimilarityNetwork>& networks, const SnfParams& params);

/// Mean off-diagonal similarity between samples sharing a label.
double mean_within_class_similarity(const Matrix& s, const Labels& labels);

}  // namespace modbal
