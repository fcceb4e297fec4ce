#include "modbal/baseline.hpp"

#include "modbal/training.hpp"

#include <cmath>
#include <cstdio>

namespace modbal {

void LogisticConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ContractError("logistic: learning_rate must be positive");
  if (epochs < 1) throw ContractError("logistic: epochs must be >= 1");
  if (l2 < 0.0) throw ContractError("logistic: l2 must be >= 0");
}

Matrix LogisticModel::predict_proba(const Matrix& x) const {
  const auto d = weights.rows() - 1;
  if (x.cols() != d) throw DimensionError("logistic: features " + shape_string(x) + " vs weights " + shape_string(weights));
  Matrix logits = x * weights.topRows(d);
  logits.rowwise() += weights.row(d);
  return softmax_rows(logits);
}

LogisticModel fit_logistic(const Matrix& x, const Labels& labels, const Rows& rows, int num_classes,
                           const LogisticConfig& config) {
  config.validate();
  if (rows.empty()) throw ContractError("fit_logistic: no training rows");
  const auto d = x.cols();
  Matrix xt(static_cast<Eigen::Index>(rows.size()), d + 1);
  Matrix onehot = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), num_classes);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    xt.row(r).head(d) = x.row(rows[i]);
    xt(r, d) = 1.0;
    onehot(r, labels[static_cast<std::size_t>(rows[i])]) = 1.0;
  }
  const double n = static_cast<double>(rows.size());

  LogisticModel model;
  model.weights = Matrix::Zero(d + 1, num_classes);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Matrix probs = softmax_rows(xt * model.weights);
    Matrix grad = xt.transpose() * (probs - onehot) / n;
    grad.topRows(d) += config.l2 * model.weights.topRows(d);
    model.weights -= config.learning_rate * grad;
    if (!model.weights.allFinite()) {
      char msg[128];
      std::snprintf(msg, sizeof msg, "logistic regression diverged at epoch %d with learning rate %g", epoch,
                    config.learning_rate);
      throw DivergenceError(msg);
    }
  }
  return model;
}

std::vector<std::vector<std::size_t>> modality_combinations(std::size_t count) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t size = 1; size <= count; ++size) {
    // Lexicographic subsets of the given size.
    std::vector<std::size_t> pick(size);
    for (std::size_t i = 0; i < size; ++i) pick[i] = i;
    while (true) {
      out.push_back(pick);
      std::size_t i = size;
      while (i > 0 && pick[i - 1] == count - size + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < size; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return out;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::string format_summary(const MetricSummary& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f \xC2\xB1 %.4f", s.mean, s.std);
  return buf;
}

std::vector<BaselineRow> logistic_baseline(const std::vector<PreparedSplit>& splits, const Labels& labels,
                                           int num_classes, const LogisticConfig& config) {
  if (splits.empty()) throw ContractError("logistic_baseline: no splits");
  const auto combos = modality_combinations(splits.front().modalities.size());
  std::vector<BaselineRow> out;
  for (const auto& combo : combos) {
    std::vector<double> acc, auc, f1;
    BaselineRow row;
    for (const auto& split : splits) {
      std::vector<const ModalityMatrix*> parts;
      for (auto m : combo) parts.push_back(&split.modalities[m]);
      const auto features = concat_modalities(parts);
      if (row.combination.empty()) row.combination = features.name;
      const auto model = fit_logistic(features.values, labels, split.masks.train_rows(), num_classes, config);
      const Rows test = split.masks.test_rows();
      const auto metrics = evaluate_predictions(take(labels, test), take_rows(model.predict_proba(features.values), test),
                                                num_classes);
      acc.push_back(metrics.accuracy);
      auc.push_back(metrics.auc);
      f1.push_back(metrics.macro_f1);
    }
    row.accuracy = summarize(acc);
    row.auc = summarize(auc);
    row.macro_f1 = summarize(f1);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace modbal
