#include "modbal/balance.hpp"

#include <cmath>
#include <sstream>

namespace modbal {

void BalanceConfig::validate() const {
  if (!(alpha > 0.0)) throw ContractError("balance: alpha must be positive");
  if (!(beta > 0.0)) throw ContractError("balance: beta must be positive");
  if (!(gamma >= 1.0)) throw ContractError("balance: gamma must be >= 1");
  if (reweight_interval < 1) throw ContractError("balance: reweight_interval must be >= 1");
}

double relative_f1(const std::vector<double>& f_scores, int modality) {
  const auto m = f_scores.size();
  if (m < 2) throw ContractError("compute_r: need at least 2 modalities");
  double others = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (f_scores[j] < 0.0) throw ContractError("compute_r: macro F1 must be >= 0");
    if (static_cast<int>(j) != modality) others += f_scores[j];
  }
  if (!(others > 0.0))
    throw SingularRatioError(modality, "compute_r: every modality other than " + std::to_string(modality) +
                                           " has macro F1 0");
  return f_scores[static_cast<std::size_t>(modality)] / (others / static_cast<double>(m - 1));
}

std::vector<double> compute_r(const std::vector<double>& f_scores) {
  std::vector<double> r;
  for (std::size_t m = 0; m < f_scores.size(); ++m) r.push_back(relative_f1(f_scores, static_cast<int>(m)));
  return r;
}

CoefficientState compute_k(const std::vector<double>& r, const std::vector<double>& f_scores,
                           const BalanceConfig& config, int num_classes) {
  if (r.size() != f_scores.size()) throw DimensionError("compute_k: r and F have different lengths");
  CoefficientState state;
  state.r = r;
  const double threshold = config.gamma / num_classes;
  for (std::size_t m = 0; m < r.size(); ++m) {
    if (f_scores[m] > threshold)
      state.k.push_back(1.0 - std::tanh(config.alpha * r[m]));
    else
      state.k.push_back(std::tanh(config.beta * r[m]));
  }
  return state;
}

CoefficientState refresh_coefficients(const std::vector<double>& f_scores, const BalanceConfig& config,
                                      int num_classes, int epoch) {
  CoefficientState state;
  state.epoch = epoch;
  if (f_scores.size() == 1) {
    state.r = {0.0};
    state.k = {0.0};
    state.notes.push_back("single modality: balancing disabled, unimodal head weight 0");
    return state;
  }
  std::vector<double> r(f_scores.size(), 0.0);
  std::vector<bool> singular(f_scores.size(), false);
  for (std::size_t m = 0; m < f_scores.size(); ++m) {
    try {
      r[m] = relative_f1(f_scores, static_cast<int>(m));
    } catch (const SingularRatioError& e) {
      singular[m] = true;
      state.notes.push_back("epoch " + std::to_string(epoch) + ": " + e.what() + "; k set to 0.5");
    }
  }
  auto computed = compute_k(r, f_scores, config, num_classes);
  state.r = r;
  state.k = computed.k;
  for (std::size_t m = 0; m < singular.size(); ++m)
    if (singular[m]) state.k[m] = 0.5;
  return state;
}

JointModel make_joint_model(std::vector<std::string> names, std::vector<GcnModel> encoders, Rng& rng) {
  if (encoders.empty()) throw ContractError("joint model: no encoders");
  if (names.size() != encoders.size()) throw ContractError("joint model: one name per encoder required");
  const int classes = encoders.front().num_classes();
  int width = 0;
  for (const auto& e : encoders) {
    if (e.num_classes() != classes) throw DimensionError("joint model: encoders disagree on the class count");
    if (e.samples() != encoders.front().samples()) throw DimensionError("joint model: encoders disagree on N");
    width += e.representation_dim;
  }
  JointModel model;
  model.names = std::move(names);
  if (encoders.size() == 1) {
    model.fusion_head = encoders.front().head_weights;
  } else {
    model.fusion_head = Matrix::Zero(width + 1, classes);
    model.fusion_head.topRows(width) = xavier_uniform(width, classes, rng);
  }
  model.encoders = std::move(encoders);
  return model;
}

JointParams JointParams::from(const JointModel& model) {
  JointParams p;
  for (const auto& e : model.encoders) p.encoders.push_back(EncoderParams::from(e));
  p.fusion_head = ad::parameter(model.fusion_head);
  return p;
}

std::vector<ad::Var> JointParams::all() const {
  std::vector<ad::Var> out;
  for (const auto& e : encoders)
    for (const auto& v : e.all()) out.push_back(v);
  out.push_back(fusion_head);
  return out;
}

void JointParams::store_into(JointModel& model) const {
  for (std::size_t m = 0; m < encoders.size(); ++m) encoders[m].store_into(model.encoders[m]);
  model.fusion_head = fusion_head->value;
}

JointOutputs joint_forward(const JointParams& params, const std::vector<std::shared_ptr<const SparseMatrix>>& adjacency,
                           const std::vector<ad::Var>& features) {
  JointOutputs out;
  for (std::size_t m = 0; m < params.encoders.size(); ++m) {
    auto repr = encode(params.encoders[m].layers, adjacency[m], features[m]);
    out.unimodal_logits.push_back(classify(repr, params.encoders[m].head));
    out.representations.push_back(repr);
  }
  out.fusion_logits = classify(ad::concat_cols(out.representations), params.fusion_head);
  return out;
}

JointLoss joint_loss(const JointOutputs& outputs, const Labels& labels, const Rows& rows,
                     const CoefficientState& coefficients) {
  if (coefficients.k.size() != outputs.unimodal_logits.size())
    throw DimensionError("joint_loss: " + std::to_string(coefficients.k.size()) + " coefficients for " +
                         std::to_string(outputs.unimodal_logits.size()) + " modality heads");
  JointLoss loss;
  auto fusion = cross_entropy(outputs.fusion_logits, labels, rows);
  ad::Var total = ad::scale(fusion, coefficients.multimodal_weight);
  for (std::size_t m = 0; m < outputs.unimodal_logits.size(); ++m) {
    auto head = cross_entropy(outputs.unimodal_logits[m], labels, rows);
    loss.head_losses.push_back(head->value(0, 0));
    total = ad::add(total, ad::scale(head, coefficients.k[m]));
  }
  loss.head_losses.push_back(fusion->value(0, 0));
  loss.total = total;
  return loss;
}

JointTrainer::JointTrainer(const JointModel& model, const std::vector<const Matrix*>& features,
                           const Labels& labels, const OptimizerConfig& optimizer)
    : shape_(model), params_(JointParams::from(model)), labels_(labels), optimizer_(params_.all(), optimizer) {
  if (features.size() != model.encoders.size())
    throw DimensionError("joint trainer: " + std::to_string(features.size()) + " feature matrices for " +
                         std::to_string(model.encoders.size()) + " encoders");
  for (std::size_t m = 0; m < features.size(); ++m) {
    const auto& enc = model.encoders[m];
    if (features[m]->rows() != enc.samples() || features[m]->cols() != enc.input_dim())
      throw DimensionError("joint trainer: features for " + model.names[m] + " are " + shape_string(*features[m]) +
                           ", encoder expects " + std::to_string(enc.samples()) + "x" +
                           std::to_string(enc.input_dim()));
    adjacency_.push_back(sparse_view(enc.normalized_adjacency));
    features_.push_back(ad::constant(*features[m]));
  }
}

StepResult JointTrainer::joint_step(const Rows& rows, const CoefficientState& coefficients) {
  auto outputs = joint_forward(params_, adjacency_, features_);
  auto loss = joint_loss(outputs, labels_, rows, coefficients);
  StepResult result;
  result.head_losses = loss.head_losses;
  result.total_loss = loss.total->value(0, 0);
  if (!std::isfinite(result.total_loss)) {
    std::ostringstream msg;
    msg << "joint training diverged; per-head losses:";
    for (std::size_t m = 0; m < loss.head_losses.size(); ++m)
      msg << ' ' << (m < shape_.names.size() ? shape_.names[m] : std::string("multimodal")) << '='
          << loss.head_losses[m];
    throw DivergenceError(msg.str());
  }
  for (const auto& l : outputs.unimodal_logits) result.unimodal_logits.push_back(l->value);
  result.fusion_logits = outputs.fusion_logits->value;
  ad::backward(loss.total);
  optimizer_.step();
  return result;
}

JointModel JointTrainer::snapshot() const {
  JointModel out = shape_;
  params_.store_into(out);
  return out;
}

std::vector<Matrix> JointTrainer::values() const {
  std::vector<Matrix> out;
  for (const auto& p : params_.all()) out.push_back(p->value);
  return out;
}

JointModel JointTrainer::model_from(const std::vector<Matrix>& values) const {
  JointParams copy = JointParams::from(shape_);
  const auto handles = copy.all();
  if (handles.size() != values.size()) throw DimensionError("joint trainer: parameter count mismatch");
  for (std::size_t i = 0; i < handles.size(); ++i) handles[i]->value = values[i];
  JointModel out = shape_;
  copy.store_into(out);
  return out;
}

BalancedResult train_balanced(const JointModel& init, const std::vector<const Matrix*>& features,
                              const Labels& labels, const SplitMasks& masks, const BalanceConfig& config,
                              const OptimizerConfig& optimizer) {
  config.validate();
  const Rows train = masks.train_rows();
  const Rows val = masks.val_rows();
  const Rows test = masks.test_rows();
  if (train.empty() || val.empty() || test.empty()) throw ContractError("train_balanced: every split must be nonempty");
  const int classes = init.num_classes();
  const auto heads = init.encoders.size();
  const Labels val_truth = take(labels, val);

  JointTrainer trainer(init, features, labels, optimizer);
  BalancedResult result;
  result.model = init;
  auto& report = result.report;
  report.head_names = init.names;
  report.head_names.push_back("multimodal");

  CoefficientState coefficients;
  coefficients.r.assign(heads, 1.0);
  coefficients.k.assign(heads, 1.0);
  if (heads == 1) coefficients = refresh_coefficients({0.0}, config, classes, 0);

  // The step reports logits from before its update, so each epoch's metrics
  // describe the parameters that produced its losses.
  std::vector<Matrix> best_values = trainer.values();
  for (int epoch = 0; epoch < optimizer.epochs; ++epoch) {
    std::vector<Matrix> before_step = trainer.values();
    const bool refresh = config.reweight && heads > 1 && epoch % config.reweight_interval == 0;
    if (refresh) {
      // Validation macro F1 of each modality head at the current parameters.
      const auto pred = predict_joint(trainer.snapshot(), features);
      std::vector<double> f;
      for (std::size_t m = 0; m < heads; ++m)
        f.push_back(macro_f1(val_truth, argmax_rows(take_rows(pred.unimodal_probabilities[m], val)), classes));
      coefficients = refresh_coefficients(f, config, classes, epoch);
      for (const auto& note : coefficients.notes) report.notes.push_back(note);
    }

    const auto step = trainer.joint_step(train, coefficients);

    BalanceEpoch row;
    row.epoch = epoch;
    row.head_losses = step.head_losses;
    row.total_loss = step.total_loss;
    row.r = coefficients.r;
    row.k = coefficients.k;
    for (const auto& logits : step.unimodal_logits)
      row.val_macro_f1.push_back(macro_f1(val_truth, argmax_rows(take_rows(logits, val)), classes));
    const double fused_f1 = macro_f1(val_truth, argmax_rows(take_rows(step.fusion_logits, val)), classes);
    row.val_macro_f1.push_back(fused_f1);
    if (fused_f1 > report.best_val_macro_f1) {
      report.best_val_macro_f1 = fused_f1;
      report.best_epoch = epoch;
      best_values = std::move(before_step);
    }
    report.epochs.push_back(std::move(row));
  }
  result.model = trainer.model_from(best_values);

  const auto pred = predict_joint(result.model, features);
  const Labels test_truth = take(labels, test);
  for (const auto& probs : pred.unimodal_probabilities)
    report.test_metrics.push_back(evaluate_predictions(test_truth, take_rows(probs, test), classes));
  report.test_metrics.push_back(evaluate_predictions(test_truth, take_rows(pred.fusion_probabilities, test), classes));
  return result;
}

JointPrediction predict_joint(const JointModel& model, const std::vector<const Matrix*>& features) {
  if (features.size() != model.encoders.size()) throw DimensionError("predict_joint: feature count mismatch");
  JointPrediction out;
  std::vector<ad::Var> reprs;
  for (std::size_t m = 0; m < features.size(); ++m) {
    const auto forward = gcn_forward(model.encoders[m], *features[m]);
    out.unimodal_probabilities.push_back(softmax_rows(forward.logits));
    reprs.push_back(ad::constant(forward.representations));
  }
  const auto fused = classify(ad::concat_cols(reprs), ad::constant(model.fusion_head));
  out.fusion_probabilities = softmax_rows(fused->value);
  return out;
}

}  // namespace modbal
