#include "modbal/training.hpp"

#include <cmath>
#include <sstream>

namespace modbal {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ContractError("optimizer: learning_rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ContractError("optimizer: momentum must lie in [0, 1)");
  if (epochs < 1) throw ContractError("optimizer: epochs must be >= 1");
  if (weight_decay < 0.0) throw ContractError("optimizer: weight_decay must be >= 0");
}

GradientDescent::GradientDescent(std::vector<ad::Var> params, const OptimizerConfig& config)
    : params_(std::move(params)), config_(config) {
  config_.validate();
  for (const auto& p : params_) velocity_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
}

void GradientDescent::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    if (p.grad.size() == 0) continue;
    Matrix g = p.grad;
    if (config_.weight_decay > 0.0) g += config_.weight_decay * p.value;
    velocity_[i] = config_.momentum * velocity_[i] + g;
    p.value -= config_.learning_rate * velocity_[i];
  }
}

ad::Var cross_entropy(const ad::Var& logits, const Labels& labels, const Rows& rows) {
  if (rows.empty()) throw ContractError("cross_entropy: empty row selection");
  const auto log_probs = ad::row_log_softmax(ad::select_rows(logits, rows));
  return ad::scale(ad::mean(ad::pick(log_probs, take(labels, rows))), -1.0);
}

double cross_entropy_value(const Matrix& logits, const Labels& labels, const Rows& rows) {
  double total = 0.0;
  for (int r : rows) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    total += lse - logits(r, labels[static_cast<std::size_t>(r)]);
  }
  return total / static_cast<double>(rows.size());
}

Matrix softmax_rows(const Matrix& logits) { return ad::row_softmax(ad::constant(logits))->value; }

EncoderFit fit_encoder(const GcnModel& init, const Matrix& x, const Labels& labels, const SplitMasks& masks,
                       const OptimizerConfig& config, const LossBuilder& loss) {
  config.validate();
  if (x.rows() != init.samples() || static_cast<Eigen::Index>(labels.size()) != x.rows())
    throw DimensionError("fit_encoder: features, labels and graph disagree on N");
  const Rows train = masks.train_rows();
  const Rows val = masks.val_rows();
  if (train.empty() || val.empty()) throw ContractError("fit_encoder: train and validation masks must be nonempty");
  const Labels val_truth = take(labels, val);

  EncoderFit fit;
  fit.model = init;
  auto params = EncoderParams::from(init);
  GradientDescent optimizer(params.all(), config);
  const auto adjacency = sparse_view(init.normalized_adjacency);
  const auto features = ad::constant(x);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    auto repr = encode(params.layers, adjacency, features);
    auto logits = classify(repr, params.head);
    LossTerms terms = loss(repr, logits);
    const double total = terms.total->value(0, 0);
    if (!std::isfinite(total)) {
      std::ostringstream msg;
      msg << "training diverged at epoch " << epoch << " with learning rate " << config.learning_rate;
      throw DivergenceError(msg.str());
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = total;
    log.val_loss = cross_entropy_value(logits->value, labels, val);
    log.val_macro_f1 = macro_f1(val_truth, argmax_rows(take_rows(logits->value, val)), init.num_classes());
    log.components = std::move(terms.components);
    if (log.val_macro_f1 > fit.best_val_macro_f1) {
      fit.best_val_macro_f1 = log.val_macro_f1;
      fit.best_epoch = epoch;
      params.store_into(fit.model);
    }
    fit.trace.push_back(std::move(log));

    ad::backward(terms.total);
    optimizer.step();
  }
  return fit;
}

EncoderFit train_unimodal(const GcnModel& init, const Matrix& x, const Labels& labels, const SplitMasks& masks,
                          const OptimizerConfig& config) {
  const Rows train = masks.train_rows();
  return fit_encoder(init, x, labels, masks, config, [&](const ad::Var&, const ad::Var& logits) {
    auto ce = cross_entropy(logits, labels, train);
    return LossTerms{ce, {ce->value(0, 0)}};
  });
}

Matrix predict_proba(const GcnModel& model, const Matrix& x) { return softmax_rows(gcn_forward(model, x).logits); }

ClassificationMetrics evaluate_on(const GcnModel& model, const Matrix& x, const Labels& labels, const Rows& rows) {
  const Matrix probs = predict_proba(model, x);
  return evaluate_predictions(take(labels, rows), take_rows(probs, rows), model.num_classes());
}

}  // namespace modbal
