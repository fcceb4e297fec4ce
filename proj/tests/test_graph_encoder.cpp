#include "doctest.h"
#include "fd.hpp"
#include "oracles.hpp"

#include "modbal/graph_encoder.hpp"
#include "modbal/similarity.hpp"

#include <numeric>

using namespace modbal;

namespace {

SimilarityNetwork random_symmetric(Rng& rng, int n) {
  SimilarityNetwork s;
  s.matrix = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) s.matrix(i, j) = s.matrix(j, i) = rng.uniform(0.01, 1.0);
  return s;
}

Matrix permute(const Matrix& m, const std::vector<int>& perm, bool cols) {
  Matrix out = m;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (cols)
      for (std::size_t j = 0; j < perm.size(); ++j) out(r, static_cast<Eigen::Index>(j)) = m(perm[i], perm[j]);
    else
      out.row(r) = m.row(perm[i]);
  }
  return out;
}

GcnModel manual_model(Rng& rng, int n, int in, std::vector<int> dims, int classes) {
  GcnModel g;
  auto s = random_symmetric(rng, n);
  g.normalized_adjacency = normalize_adjacency(threshold_adjacency(s, 2.0).adjacency);
  for (int d : dims) {
    g.layer_weights.push_back(fd::random(rng, in, d));
    in = d;
  }
  g.representation_dim = in;
  g.head_weights = fd::random(rng, in + 1, classes);
  return g;
}

}  // namespace

TEST_SUITE("graph_encoder") {

TEST_CASE("normalize_adjacency") {
  CHECK(normalize_adjacency(Matrix::Zero(3, 3)) == Matrix::Identity(3, 3));
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  CHECK(((normalize_adjacency(a).array() - 0.5).abs() < 1e-15).all());

  Rng rng(31);
  const auto s = random_symmetric(rng, 7);
  std::vector<int> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  const Matrix direct = permute(normalize_adjacency(s.matrix), perm, true);
  const Matrix after = normalize_adjacency(permute(s.matrix, perm, true));
  CHECK((direct - after).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("threshold keeps every edge at the all-neighbors target") {
  Rng rng(32);
  auto s = random_symmetric(rng, 6);
  s.matrix(0, 3) = s.matrix(3, 0) = 0.0;
  const auto t = threshold_adjacency(s, 5.0);
  double smallest = 1.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (s.matrix(i, j) > 0) smallest = std::min(smallest, s.matrix(i, j));
  CHECK(t.spec.epsilon == smallest);
  CHECK(t.adjacency == s.matrix);
}

TEST_CASE("threshold with one dominant entry per row") {
  SimilarityNetwork s;
  s.matrix = Matrix::Constant(4, 4, 0.05);
  s.matrix.diagonal().setZero();
  s.matrix(0, 1) = s.matrix(1, 0) = 0.9;
  s.matrix(2, 3) = s.matrix(3, 2) = 0.8;
  const auto t = threshold_adjacency(s, 1.0);
  Matrix want = Matrix::Zero(4, 4);
  want(0, 1) = want(1, 0) = 0.9;
  want(2, 3) = want(3, 2) = 0.8;
  CHECK(t.adjacency == want);
}

TEST_CASE("threshold cutoff matches a sort over all pairs") {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_symmetric(rng, 6);
    std::vector<double> values;
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j) values.push_back(s.matrix(i, j));
    std::sort(values.rbegin(), values.rend());
    const double eps = values[static_cast<std::size_t>(2.0 * 6 / 2.0) - 1];
    const auto t = threshold_adjacency(s, 2.0);
    CHECK(t.spec.epsilon == eps);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) CHECK(t.adjacency(i, j) == (i != j && s.matrix(i, j) >= eps ? s.matrix(i, j) : 0.0));
  }
}

TEST_CASE("forward trivial cases") {
  Rng rng(34);
  GcnModel g;
  g.normalized_adjacency = Matrix::Identity(4, 4);
  g.layer_weights = {Matrix::Identity(3, 3)};
  g.representation_dim = 3;
  g.head_weights = fd::random(rng, 4, 2);
  const Matrix x = fd::random(rng, 4, 3);
  // A single layer is linear, so the representation is x itself.
  CHECK(gcn_forward(g, x).representations == x);
  g.layer_weights = {Matrix::Identity(3, 3), Matrix::Identity(3, 3)};
  CHECK(gcn_forward(g, x).representations == x.cwiseMax(0.0));
  CHECK(gcn_forward(g, Matrix::Zero(4, 3)).representations.isZero());
}

TEST_CASE("two-layer forward matches formula transcription") {
  Rng rng(35);
  const auto g = manual_model(rng, 5, 4, {3, 2}, 3);
  const Matrix x = fd::random(rng, 5, 4);
  const auto out = gcn_forward(g, x);
  using oracle::product;
  const auto a = oracle::from(g.normalized_adjacency);
  auto h = product(product(a, oracle::from(x)), oracle::from(g.layer_weights[0]));
  for (auto& row : h)
    for (auto& v : row) v = std::max(v, 0.0);
  h = product(product(a, h), oracle::from(g.layer_weights[1]));
  for (auto& row : h) row.push_back(1.0);
  const auto logits = product(h, oracle::from(g.head_weights));
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(std::abs(out.representations(i, j) - h[i][j]) < 1e-12);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(out.logits(i, c) - logits[i][c]) < 1e-12);
  }
}

TEST_CASE("permutation equivariance") {
  Rng rng(36);
  const auto g = manual_model(rng, 12, 5, {6, 4}, 3);
  const Matrix x = fd::random(rng, 12, 5);
  const auto base = gcn_forward(g, x);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    GcnModel p = g;
    p.normalized_adjacency = permute(g.normalized_adjacency, perm, true);
    const auto out = gcn_forward(p, permute(x, perm, false));
    CHECK((out.logits - permute(base.logits, perm, false)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("revised GCN construction") {
  Rng data(37);
  const ModalityMatrix rppa{"RPPA", fd::random(data, 20, 6), {}};
  auto fused = random_symmetric(data, 20);
  fused.kind = NetworkKind::fused;
  EncoderConfig cfg;
  cfg.layer_dims = {8, 4};
  cfg.avg_edges_per_node = 4.0;

  Rng r1(5), r2(5);
  const auto a = build_rgcn(rppa, fused, 3, cfg, r1);
  const auto b = build_rgcn(rppa, fused, 3, cfg, r2);
  CHECK(a.layer_weights[0] == b.layer_weights[0]);
  CHECK(a.layer_weights[1] == b.layer_weights[1]);
  CHECK(a.head_weights == b.head_weights);
  CHECK(a.node_source == "RPPA");

  // When the edges come from the node modality itself the revised model is a plain GCN.
  Rng r3(5);
  const auto plain = build_gcn(rppa, fused, 3, cfg, r3);
  CHECK(plain.normalized_adjacency == a.normalized_adjacency);
  CHECK(plain.layer_weights[0] == a.layer_weights[0]);

  auto raw = fused;
  raw.kind = NetworkKind::raw_W;
  Rng r4(5);
  CHECK_THROWS_AS(build_rgcn(rppa, raw, 3, cfg, r4), ContractError);
  const ModalityMatrix short_x{"CNV", fd::random(data, 19, 6), {}};
  CHECK_THROWS_AS(build_rgcn(short_x, fused, 3, cfg, r4), DimensionError);
}

}
