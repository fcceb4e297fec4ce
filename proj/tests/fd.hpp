#pragma once

// Central finite differences, computed independently of ad::gradient_check.

#include "modbal/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace fd {

using Fn = std::function<modbal::ad::Var(const modbal::ad::Var&)>;

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over all
/// coordinates of `point`.
inline double relative_error(const Fn& f, const modbal::Matrix& point, double eps = 1e-6, double floor = 1e-3) {
  using namespace modbal;
  auto x = ad::parameter(point);
  ad::backward(f(x));
  const Matrix analytic = x->grad.size() == 0 ? Matrix::Zero(point.rows(), point.cols()) : x->grad;
  double worst = 0.0;
  Matrix probe = point;
  for (Eigen::Index i = 0; i < point.rows(); ++i)
    for (Eigen::Index j = 0; j < point.cols(); ++j) {
      const double saved = probe(i, j);
      probe(i, j) = saved + eps;
      const double up = f(ad::constant(probe))->value(0, 0);
      probe(i, j) = saved - eps;
      const double down = f(ad::constant(probe))->value(0, 0);
      probe(i, j) = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double scale = std::max({std::abs(analytic(i, j)), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic(i, j) - numeric) / scale);
    }
  return worst;
}

inline modbal::Matrix random(modbal::Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  modbal::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

/// Random matrix whose entries all satisfy |x| >= margin, so ReLU and clamp
/// kinks stay out of reach of the finite-difference step.
inline modbal::Matrix away_from_zero(modbal::Rng& rng, Eigen::Index rows, Eigen::Index cols, double margin = 0.05) {
  modbal::Matrix m = random(rng, rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (std::abs(m(i, j)) < margin) m(i, j) = m(i, j) < 0 ? -margin - std::abs(m(i, j)) : margin + m(i, j);
  return m;
}

}  // namespace fd
