#pragma once

// Thresholded adjacency construction and (revised) GCN encoders.

#include "modbal/autodiff.hpp"
#include "modbal/similarity.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace modbal {

struct AdjacencySpec {
  double avg_edges_per_node = 10.0;
  double epsilon = 0.0;
  bool self_loops = true;
  std::vector<std::string> warnings;
};

struct ThresholdedAdjacency {
  AdjacencySpec spec;
  Matrix adjacency;  // zero diagonal, symmetric
};

/// Picks the smallest positive epsilon whose surviving edges keep the mean
/// off-diagonal degree at or below `avg_edges_per_node`, then keeps s_ij >= epsilon.
ThresholdedAdjacency threshold_adjacency(const SimilarityNetwork& s, double avg_edges_per_node);

/// D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I.
Matrix normalize_adjacency(const Matrix& a);

/// Layer widths after the input; the last entry is the representation dim d.
struct EncoderConfig {
  std::vector<int> layer_dims{64, 64};
  double avg_edges_per_node = 10.0;
};

struct GcnModel {
  std::vector<Matrix> layer_weights;
  Matrix normalized_adjacency;
  Matrix head_weights;  // (d + 1) x C, last row is the bias
  int representation_dim = 0;
  std::uint64_t seed = 0;
  AdjacencySpec adjacency;
  std::string node_source;
  std::string edge_source;

  int input_dim() const { return static_cast<int>(layer_weights.front().rows()); }
  int num_classes() const { return static_cast<int>(head_weights.cols()); }
  Eigen::Index samples() const { return normalized_adjacency.rows(); }
};

struct EncoderOutput {
  Matrix representations;  // N x d
  Matrix logits;           // N x C
};

/// Trainable handles onto a model's weights.
struct EncoderParams {
  std::vector<ad::Var> layers;
  ad::Var head;

  static EncoderParams from(const GcnModel& model);
  std::vector<ad::Var> all() const;
  void store_into(GcnModel& model) const;
};

/// H_{l+1} = relu(Ahat H_l W_l) for every layer except the last, which is linear.
ad::Var encode(const std::vector<ad::Var>& layers, const std::shared_ptr<const SparseMatrix>& adjacency,
               const ad::Var& x);

std::shared_ptr<const SparseMatrix> sparse_view(const Matrix& adjacency);
/// [H, 1] * head.
ad::Var classify(const ad::Var& representation, const ad::Var& head);

EncoderOutput gcn_forward(const GcnModel& model, const Matrix& x);

/// Plain GCN: node features and edges may come from any sources with matching N.
GcnModel build_gcn(const ModalityMatrix& node, const SimilarityNetwork& edges, int num_classes,
                   const EncoderConfig& config, Rng& rng);

/// Revised GCN: node features from one modality, edges from the fused network.
GcnModel build_rgcn(const ModalityMatrix& node, const SimilarityNetwork& fused_edges, int num_classes,
                    const EncoderConfig& config, Rng& rng);

}  // namespace modbal
