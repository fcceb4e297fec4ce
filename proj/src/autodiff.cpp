#include "modbal/autodiff.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

namespace modbal::ad {

void Node::accumulate(const Matrix& g) {
  if (grad.size() == 0)
    grad = g;
  else
    grad += g;
}

namespace {

Var make(Matrix value, const char* op, std::vector<Var> parents, std::function<void(Node&)> backprop) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  for (const auto& p : parents) node->requires_grad = node->requires_grad || p->requires_grad;
  node->parents = std::move(parents);
  if (node->requires_grad) node->backprop = std::move(backprop);
  return node;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a->value) + " vs " +
                         shape_string(b->value));
}

// Per-row max subtraction keeps exp() in range for large logits.
Matrix stable_softmax(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

}  // namespace

Var constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = "constant";
  return node;
}

Var parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = "parameter";
  node->requires_grad = true;
  return node;
}

Var matmul(const Var& a, const Var& b) {
  if (a->value.cols() != b->value.rows())
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a->value) + " * " +
                         shape_string(b->value));
  return make(a->value * b->value, "matmul", {a, b}, [](Node& self) {
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    if (pa->requires_grad) pa->accumulate(self.grad * pb->value.transpose());
    if (pb->requires_grad) pb->accumulate(pa->value.transpose() * self.grad);
  });
}

Var spmm(const std::shared_ptr<const SparseMatrix>& a, const Var& x) {
  if (a->cols() != x->value.rows())
    throw DimensionError("spmm: inner dimensions differ, " + std::to_string(a->rows()) + "x" +
                         std::to_string(a->cols()) + " * " + shape_string(x->value));
  return make(Matrix(*a * x->value), "spmm", {x}, [a](Node& self) {
    const auto& px = self.parents[0];
    if (px->requires_grad) px->accumulate(a->transpose() * self.grad);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return make(a->value + b->value, "add", {a, b}, [](Node& self) {
    for (const auto& p : self.parents)
      if (p->requires_grad) p->accumulate(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return make(a->value - b->value, "sub", {a, b}, [](Node& self) {
    if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad);
    if (self.parents[1]->requires_grad) self.parents[1]->accumulate(-self.grad);
  });
}

Var hadamard(const Var& a, const Var& b) {
  require_same_shape(a, b, "hadamard");
  return make(a->value.cwiseProduct(b->value), "hadamard", {a, b}, [](Node& self) {
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    if (pa->requires_grad) pa->accumulate(self.grad.cwiseProduct(pb->value));
    if (pb->requires_grad) pb->accumulate(self.grad.cwiseProduct(pa->value));
  });
}

Var scale(const Var& a, double s) {
  return make(a->value * s, "scale", {a}, [s](Node& self) { self.parents[0]->accumulate(self.grad * s); });
}

Var relu(const Var& a) {
  return make(a->value.cwiseMax(0.0), "relu", {a}, [](Node& self) {
    const auto& x = self.parents[0]->value;
    self.parents[0]->accumulate((x.array() > 0.0).select(self.grad, 0.0));
  });
}

Var row_softmax(const Var& a) {
  return make(stable_softmax(a->value), "row_softmax", {a}, [](Node& self) {
    const Matrix& y = self.value;
    const Vector dots = self.grad.cwiseProduct(y).rowwise().sum();
    Matrix g = self.grad;
    g.colwise() -= dots;
    self.parents[0]->accumulate(g.cwiseProduct(y));
  });
}

Var row_log_softmax(const Var& a) {
  const Matrix& x = a->value;
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    const double lse = m + std::log((x.row(r).array() - m).exp().sum());
    out.row(r) = x.row(r).array() - lse;
  }
  return make(std::move(out), "row_log_softmax", {a}, [](Node& self) {
    const Matrix probs = self.value.array().exp().matrix();
    const Vector totals = self.grad.rowwise().sum();
    Matrix g = probs;
    for (Eigen::Index r = 0; r < g.rows(); ++r) g.row(r) *= totals(r);
    self.parents[0]->accumulate(self.grad - g);
  });
}

Var clamp_min(const Var& a, double floor) {
  return make(a->value.cwiseMax(floor), "clamp_min", {a}, [floor](Node& self) {
    const auto& x = self.parents[0]->value;
    self.parents[0]->accumulate((x.array() >= floor).select(self.grad, 0.0));
  });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a->value.sum();
  return make(std::move(out), "sum", {a}, [](Node& self) {
    const auto& x = self.parents[0]->value;
    self.parents[0]->accumulate(Matrix::Constant(x.rows(), x.cols(), self.grad(0, 0)));
  });
}

Var mean(const Var& a) {
  const auto n = static_cast<double>(a->value.size());
  if (n == 0) throw ContractError("mean: empty operand");
  Matrix out(1, 1);
  out(0, 0) = a->value.sum() / n;
  return make(std::move(out), "mean", {a}, [n](Node& self) {
    const auto& x = self.parents[0]->value;
    self.parents[0]->accumulate(Matrix::Constant(x.rows(), x.cols(), self.grad(0, 0) / n));
  });
}

Var select_rows(const Var& a, const Rows& rows) {
  const auto& x = a->value;
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows())
      throw DimensionError("select_rows: row " + std::to_string(rows[i]) + " outside " + shape_string(x));
    out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  }
  return make(std::move(out), "select_rows", {a}, [rows](Node& self) {
    const auto& x = self.parents[0]->value;
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) g.row(rows[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    self.parents[0]->accumulate(g);
  });
}

Var pick(const Var& a, const std::vector<int>& cols) {
  const auto& x = a->value;
  if (static_cast<Eigen::Index>(cols.size()) != x.rows())
    throw DimensionError("pick: " + std::to_string(cols.size()) + " indices for " + shape_string(x));
  Matrix out(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const int c = cols[static_cast<std::size_t>(r)];
    if (c < 0 || c >= x.cols()) throw DimensionError("pick: column " + std::to_string(c) + " outside " + shape_string(x));
    out(r, 0) = x(r, c);
  }
  return make(std::move(out), "pick", {a}, [cols](Node& self) {
    const auto& x = self.parents[0]->value;
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) g(r, cols[static_cast<std::size_t>(r)]) = self.grad(r, 0);
    self.parents[0]->accumulate(g);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no operands");
  const auto rows = parts.front()->value.rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p->value.rows() != rows)
      throw DimensionError("concat_cols: row counts differ, " + shape_string(parts.front()->value) + " vs " +
                           shape_string(p->value));
    cols += p->value.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p->value.cols()) = p->value;
    offset += p->value.cols();
  }
  return make(std::move(out), "concat_cols", parts, [](Node& self) {
    Eigen::Index off = 0;
    for (const auto& p : self.parents) {
      const auto w = p->value.cols();
      if (p->requires_grad) p->accumulate(self.grad.middleCols(off, w));
      off += w;
    }
  });
}

Var append_ones(const Var& a) {
  const auto& x = a->value;
  Matrix out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return make(std::move(out), "append_ones", {a}, [](Node& self) {
    self.parents[0]->accumulate(self.grad.leftCols(self.grad.cols() - 1));
  });
}

Var operator+(const Var& a, const Var& b) { return add(a, b); }
Var operator-(const Var& a, const Var& b) { return sub(a, b); }
Var operator*(double s, const Var& a) { return scale(a, s); }

void backward(const Var& root) {
  if (root->value.rows() != 1 || root->value.cols() != 1)
    throw ContractError("backward: root must be 1x1, got " + shape_string(root->value));

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad.resize(0, 0);
  root->grad = Matrix::Ones(1, 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->requires_grad || !n->backprop) continue;
    if (n->grad.size() == 0) continue;  // not on any path from root
    n->backprop(*n);
  }
  for (Node* n : order)
    if (n->requires_grad && n->grad.size() == 0) n->grad = Matrix::Zero(n->value.rows(), n->value.cols());
}

double gradient_check(const std::function<Var(const Var&)>& f, const Matrix& point, double eps) {
  if (!(eps > 0)) throw ContractError("gradient_check: eps must be positive");
  auto x = parameter(point);
  auto root = f(x);
  backward(root);
  const Matrix analytic = x->grad;

  double worst = 0.0;
  Matrix probe = point;
  for (Eigen::Index i = 0; i < point.rows(); ++i) {
    for (Eigen::Index j = 0; j < point.cols(); ++j) {
      const double saved = probe(i, j);
      probe(i, j) = saved + eps;
      const double up = f(constant(probe))->value(0, 0);
      probe(i, j) = saved - eps;
      const double down = f(constant(probe))->value(0, 0);
      probe(i, j) = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = std::abs(analytic(i, j) - numeric) / std::max(1.0, std::abs(analytic(i, j)));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace modbal::ad
