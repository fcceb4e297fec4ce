#pragma once

// Minimal reverse-mode differentiation over dense matrices.
//
// A graph is built eagerly: every op computes its value immediately and
// records how to push gradients back to its parents. `backward` sweeps the
// DAG in reverse topological order from a 1x1 root.

#include "modbal/core.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace modbal::ad {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Matrix value;
  Matrix grad;  // sized on first accumulation
  bool requires_grad = false;
  std::string op;
  std::vector<Var> parents;
  std::function<void(Node&)> backprop;

  void accumulate(const Matrix& g);
};

/// Leaf that never receives a gradient.
Var constant(Matrix value);
/// Leaf whose gradient is collected by `backward`.
Var parameter(Matrix value);

Var matmul(const Var& a, const Var& b);
/// Constant sparse left factor; only `x` receives a gradient.
Var spmm(const std::shared_ptr<const SparseMatrix>& a, const Var& x);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var relu(const Var& a);
Var row_softmax(const Var& a);
Var row_log_softmax(const Var& a);
/// Elementwise max(a, floor); gradient is zero where the floor is active.
Var clamp_min(const Var& a, double floor);
Var sum(const Var& a);
Var mean(const Var& a);
Var select_rows(const Var& a, const Rows& rows);
/// One entry per row: out(i, 0) = a(i, cols[i]).
Var pick(const Var& a, const std::vector<int>& cols);
Var concat_cols(const std::vector<Var>& parts);
/// Appends a constant column of ones (bias trick).
Var append_ones(const Var& a);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(double s, const Var& a);

/// Populates `grad` on every node reachable from `root`. Gradients of all
/// reachable nodes are reset first, so repeated calls give identical results.
void backward(const Var& root);

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
/// Coordinates sitting on a ReLU kink are not excluded automatically; callers
/// choose points away from them.
double gradient_check(const std::function<Var(const Var&)>& f, const Matrix& point, double eps);

}  // namespace modbal::ad
