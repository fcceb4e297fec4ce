#include "modbal/reduction.hpp"

#include "modbal/autodiff.hpp"
#include "modbal/training.hpp"

#include <cmath>

namespace modbal {

namespace {

// Principal directions as columns, strongest first; sign fixed so the
// largest-magnitude loading of each direction is positive.
Matrix principal_directions(const Matrix& centered, int k, std::vector<std::string>& warnings) {
  const auto n = centered.rows();
  const auto d = centered.cols();
  Matrix dirs = Matrix::Zero(d, k);
  if (d <= n) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(centered.transpose() * centered);
    for (int j = 0; j < k; ++j) dirs.col(j) = eig.eigenvectors().col(d - 1 - j);
  } else {
    // Gram trick: eigenvectors of X X^T map to those of X^T X.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(centered * centered.transpose());
    const double top = std::max(eig.eigenvalues()(n - 1), 0.0);
    int degenerate = 0;
    for (int j = 0; j < k && j < n; ++j) {
      const double lambda = eig.eigenvalues()(n - 1 - j);
      if (lambda <= 1e-12 * top || lambda <= 0.0) {
        ++degenerate;
        continue;
      }
      dirs.col(j) = centered.transpose() * eig.eigenvectors().col(n - 1 - j) / std::sqrt(lambda);
    }
    degenerate += static_cast<int>(std::max<Eigen::Index>(0, k - n));
    if (degenerate > 0)
      warnings.push_back(std::to_string(degenerate) + " principal directions beyond the training rank set to zero");
  }
  for (int j = 0; j < k; ++j) {
    Eigen::Index arg = 0;
    dirs.col(j).cwiseAbs().maxCoeff(&arg);
    if (dirs(arg, j) < 0.0) dirs.col(j) *= -1.0;
  }
  return dirs;
}

double top_eigenvalue(const Matrix& centered) {
  Vector v = Vector::Ones(centered.cols()).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vector w = centered.transpose() * (centered * v);
    lambda = w.norm();
    if (lambda == 0.0) return 0.0;
    v = w / lambda;
  }
  return lambda / static_cast<double>(centered.rows());
}

// Largest squared singular value by warm-started power iteration on m^T m.
double spectral_sq(const Matrix& m, Vector& v) {
  double s = 0.0;
  for (int it = 0; it < 10; ++it) {
    Vector w = m.transpose() * (m * v);
    s = w.norm();
    if (s == 0.0) return 0.0;
    v = w / s;
  }
  return s;
}

}  // namespace

std::string to_string(ReductionMethod m) { return m == ReductionMethod::pca ? "pca" : "autoencoder"; }

ReductionMethod parse_reduction_method(const std::string& s) {
  if (s == "pca") return ReductionMethod::pca;
  if (s == "autoencoder") return ReductionMethod::autoencoder;
  throw DataError("unknown reduction method '" + s + "' (expected pca or autoencoder)");
}

Reduction reduce_features(const ModalityMatrix& x, const std::vector<bool>& train_mask, const ReductionConfig& config,
                          Rng& rng) {
  if (static_cast<Eigen::Index>(train_mask.size()) != x.samples())
    throw DimensionError("reduce_features: mask covers " + std::to_string(train_mask.size()) + " samples, " + x.name +
                         " has " + std::to_string(x.samples()));
  if (config.target_dim < 1) throw ContractError("reduce_features: target_dim must be >= 1");
  Reduction out;
  if (config.target_dim >= x.features()) {
    out.reduced = x;
    out.warnings.push_back(x.name + ": target_dim " + std::to_string(config.target_dim) + " >= " +
                           std::to_string(x.features()) + " features; passed through unchanged");
    return out;
  }

  const Rows train = mask_rows(train_mask);
  if (train.size() < 2) throw ContractError("reduce_features: need at least 2 training samples");
  Matrix train_x(static_cast<Eigen::Index>(train.size()), x.features());
  for (std::size_t i = 0; i < train.size(); ++i) train_x.row(static_cast<Eigen::Index>(i)) = x.values.row(train[i]);
  const Eigen::RowVectorXd center = train_x.colwise().mean();
  const Matrix centered = train_x.rowwise() - center;
  const double n = static_cast<double>(train.size());
  const double entries = n * static_cast<double>(x.features());

  Matrix encoder;
  if (config.method == ReductionMethod::pca) {
    encoder = principal_directions(centered, config.target_dim, out.warnings);
    const Matrix residual = centered - centered * encoder * encoder.transpose();
    out.train_reconstruction_error = residual.squaredNorm() / entries;
  } else {
    const auto& ae = config.autoencoder;
    const double lambda = top_eigenvalue(centered);
    if (lambda == 0.0) throw ContractError("reduce_features: " + x.name + " has no variance on training samples");
    auto enc = ad::parameter(xavier_uniform(static_cast<int>(x.features()), config.target_dim, rng));
    auto dec = ad::parameter(xavier_uniform(config.target_dim, static_cast<int>(x.features()), rng));
    OptimizerConfig opt;
    opt.learning_rate = ae.relative_learning_rate / lambda;
    opt.momentum = ae.momentum;
    opt.epochs = ae.epochs;
    GradientDescent gd({enc, dec}, opt);
    const auto data = ad::constant(centered);
    double loss = 0.0;
    Vector v_enc = Vector::Ones(config.target_dim).normalized(), v_dec = Vector::Ones(x.features()).normalized();
    for (int epoch = 0; epoch < ae.epochs; ++epoch) {
      auto residual = ad::sub(ad::matmul(ad::matmul(data, enc), dec), data);
      // Per-sample squared error keeps the curvature on the scale of lambda.
      auto objective = ad::scale(ad::sum(ad::hadamard(residual, residual)), 1.0 / n);
      loss = objective->value(0, 0);
      if (!std::isfinite(loss)) throw DivergenceError("autoencoder diverged at epoch " + std::to_string(epoch));
      ad::backward(objective);
      // Curvature in one factor scales with the other factor's squared norm.
      enc->grad /= std::max(1.0, spectral_sq(dec->value, v_dec));
      dec->grad /= std::max(1.0, spectral_sq(enc->value, v_enc));
      gd.step();
    }
    encoder = enc->value;
    const Matrix residual = centered * enc->value * dec->value - centered;
    out.train_reconstruction_error = residual.squaredNorm() / entries;
  }

  out.reduced.name = x.name;
  out.reduced.values = (x.values.rowwise() - center) * encoder;
  for (int j = 0; j < config.target_dim; ++j)
    out.reduced.feature_names.push_back(x.name + "_c" + std::to_string(j + 1));
  return out;
}

ModalityMatrix standardize(const ModalityMatrix& x, const std::vector<bool>& train_mask) {
  const Rows train = mask_rows(train_mask);
  if (train.size() < 2) throw ContractError("standardize: need at least 2 training samples");
  ModalityMatrix out = x;
  for (Eigen::Index c = 0; c < x.features(); ++c) {
    double mean = 0.0;
    for (int r : train) mean += x.values(r, c);
    mean /= static_cast<double>(train.size());
    double var = 0.0;
    for (int r : train) var += (x.values(r, c) - mean) * (x.values(r, c) - mean);
    var /= static_cast<double>(train.size() - 1);
    const double sd = var > 1e-24 ? std::sqrt(var) : 1.0;
    out.values.col(c) = (x.values.col(c).array() - mean) / sd;
  }
  return out;
}

}  // namespace modbal
