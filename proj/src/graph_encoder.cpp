#include "modbal/graph_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace modbal {

ThresholdedAdjacency threshold_adjacency(const SimilarityNetwork& s, double avg_edges_per_node) {
  const auto n = s.size();
  if (s.matrix.cols() != n) throw DimensionError("threshold_adjacency: network must be square");
  if (!(avg_edges_per_node >= 1.0) || !(avg_edges_per_node < static_cast<double>(n)))
    throw ContractError("threshold_adjacency: avg_edges_per_node must lie in [1, N)");

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (s.matrix(i, j) > 0.0) values.push_back(s.matrix(i, j));
  std::sort(values.begin(), values.end(), std::greater<>());

  ThresholdedAdjacency out;
  out.spec.avg_edges_per_node = avg_edges_per_node;
  out.adjacency = Matrix::Zero(n, n);
  if (values.empty()) {
    out.spec.epsilon = 0.0;
    out.spec.warnings.push_back("network has no positive off-diagonal entries; adjacency is empty");
    return out;
  }

  // Walk cutoffs from the largest value down; a cutoff admits every entry
  // tied with it, so only the last index of each tie group is a candidate.
  const double max_edges = avg_edges_per_node * static_cast<double>(n) / 2.0;
  std::size_t keep = 0;
  bool found = false;
  for (std::size_t idx = 0; idx < values.size(); ++idx) {
    if (idx + 1 < values.size() && values[idx + 1] == values[idx]) continue;
    if (static_cast<double>(idx + 1) <= max_edges) {
      keep = idx + 1;
      found = true;
    } else {
      break;
    }
  }
  if (!found) {
    keep = values.size();
    out.spec.warnings.push_back("target degree unachievable with ties at the top value; keeping all edges");
  }
  out.spec.epsilon = values[keep - 1];

  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (s.matrix(i, j) > 0.0 && s.matrix(i, j) >= out.spec.epsilon) {
        out.adjacency(i, j) = s.matrix(i, j);
        out.adjacency(j, i) = s.matrix(i, j);
      }
  return out;
}

Matrix normalize_adjacency(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("normalize_adjacency: adjacency must be square");
  const auto n = a.rows();
  Matrix tilde = a;
  tilde.diagonal().array() += 1.0;
  const Vector inv_sqrt = tilde.rowwise().sum().array().rsqrt();
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = inv_sqrt(i) * tilde(i, j) * inv_sqrt(j);
  return out;
}

EncoderParams EncoderParams::from(const GcnModel& model) {
  EncoderParams p;
  for (const auto& w : model.layer_weights) p.layers.push_back(ad::parameter(w));
  p.head = ad::parameter(model.head_weights);
  return p;
}

std::vector<ad::Var> EncoderParams::all() const {
  std::vector<ad::Var> out = layers;
  out.push_back(head);
  return out;
}

void EncoderParams::store_into(GcnModel& model) const {
  for (std::size_t l = 0; l < layers.size(); ++l) model.layer_weights[l] = layers[l]->value;
  model.head_weights = head->value;
}

std::shared_ptr<const SparseMatrix> sparse_view(const Matrix& adjacency) {
  return std::make_shared<const SparseMatrix>(adjacency.sparseView());
}

ad::Var encode(const std::vector<ad::Var>& layers, const std::shared_ptr<const SparseMatrix>& adjacency,
               const ad::Var& x) {
  ad::Var h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = ad::spmm(adjacency, ad::matmul(h, layers[l]));
    if (l + 1 < layers.size()) h = ad::relu(h);
  }
  return h;
}

ad::Var classify(const ad::Var& representation, const ad::Var& head) {
  return ad::matmul(ad::append_ones(representation), head);
}

EncoderOutput gcn_forward(const GcnModel& model, const Matrix& x) {
  if (x.rows() != model.samples())
    throw DimensionError("gcn_forward: features have " + std::to_string(x.rows()) + " rows, graph has " +
                         std::to_string(model.samples()) + " nodes");
  if (x.cols() != model.input_dim())
    throw DimensionError("gcn_forward: features have " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(model.input_dim()));
  std::vector<ad::Var> layers;
  for (const auto& w : model.layer_weights) layers.push_back(ad::constant(w));
  auto repr = encode(layers, sparse_view(model.normalized_adjacency), ad::constant(x));
  auto logits = classify(repr, ad::constant(model.head_weights));
  return {repr->value, logits->value};
}

GcnModel build_gcn(const ModalityMatrix& node, const SimilarityNetwork& edges, int num_classes,
                   const EncoderConfig& config, Rng& rng) {
  if (node.samples() != edges.size())
    throw DimensionError("build_gcn: node features '" + node.name + "' have " + std::to_string(node.samples()) +
                         " samples but the edge network has " + std::to_string(edges.size()));
  if (config.layer_dims.empty()) throw ContractError("build_gcn: encoder needs at least one layer");
  if (num_classes < 2) throw ContractError("build_gcn: need at least 2 classes");
  for (int d : config.layer_dims)
    if (d < 1) throw ContractError("build_gcn: layer widths must be positive");

  GcnModel model;
  model.seed = rng.seed();
  auto thresholded = threshold_adjacency(edges, config.avg_edges_per_node);
  model.adjacency = thresholded.spec;
  model.normalized_adjacency = normalize_adjacency(thresholded.adjacency);
  int fan_in = static_cast<int>(node.features());
  for (int width : config.layer_dims) {
    model.layer_weights.push_back(xavier_uniform(fan_in, width, rng));
    fan_in = width;
  }
  model.representation_dim = fan_in;
  model.head_weights = Matrix::Zero(fan_in + 1, num_classes);
  model.head_weights.topRows(fan_in) = xavier_uniform(fan_in, num_classes, rng);
  model.node_source = node.name;
  model.edge_source = to_string(edges.kind);
  return model;
}

GcnModel build_rgcn(const ModalityMatrix& node, const SimilarityNetwork& fused_edges, int num_classes,
                    const EncoderConfig& config, Rng& rng) {
  if (fused_edges.kind != NetworkKind::fused)
    throw ContractError("build_rgcn: edges must be a fused network, got " + to_string(fused_edges.kind));
  return build_gcn(node, fused_edges, num_classes, config, rng);
}

}  // namespace modbal
