#pragma once

// Multitask-like joint training: one fused multimodal head plus one head per
// modality, with per-modality loss coefficients driven by validation macro F1.

#include "modbal/training.hpp"

#include <string>
#include <vector>

namespace modbal {

enum class FusionKind { concatenation };

struct BalanceConfig {
  double alpha = 0.25;  // damping for above-threshold modalities
  double beta = 0.1;    // damping for low-information modalities
  double gamma = 1.5;   // low-information threshold multiplier on 1/C
  int reweight_interval = 5;
  FusionKind fusion = FusionKind::concatenation;
  /// false pins every coefficient at 1 (unweighted multitask training).
  bool reweight = true;

  void validate() const;
};

/// Every other modality has macro F1 0, so the relative ratio is undefined.
class SingularRatioError : public ContractError {
 public:
  SingularRatioError(int modality, const std::string& what) : ContractError(what), modality_(modality) {}
  int modality() const { return modality_; }

 private:
  int modality_;
};

struct CoefficientState {
  std::vector<double> r;
  std::vector<double> k;  // one per modality head
  double multimodal_weight = 1.0;
  int epoch = 0;
  std::vector<std::string> notes;
};

/// r^m = F^m / mean_{j != m} F^j.
double relative_f1(const std::vector<double>& f_scores, int modality);
std::vector<double> compute_r(const std::vector<double>& f_scores);

/// k^m = 1 - tanh(alpha r^m) when F^m > gamma / C, else tanh(beta r^m).
CoefficientState compute_k(const std::vector<double>& r, const std::vector<double>& f_scores,
                           const BalanceConfig& config, int num_classes);

/// compute_r + compute_k, falling back to k = 0.5 (logged) for a modality
/// whose ratio is singular. With a single modality its head gets k = 0.
CoefficientState refresh_coefficients(const std::vector<double>& f_scores, const BalanceConfig& config,
                                      int num_classes, int epoch);

struct JointModel {
  std::vector<std::string> names;
  std::vector<GcnModel> encoders;
  Matrix fusion_head;  // (M d + 1) x C

  int num_classes() const { return static_cast<int>(fusion_head.cols()); }
};

/// Fusion head initialized uniformly; with one modality it copies that
/// encoder's head so the joint model starts as the plain encoder.
JointModel make_joint_model(std::vector<std::string> names, std::vector<GcnModel> encoders, Rng& rng);

struct JointParams {
  std::vector<EncoderParams> encoders;
  ad::Var fusion_head;

  static JointParams from(const JointModel& model);
  std::vector<ad::Var> all() const;
  void store_into(JointModel& model) const;
};

struct JointOutputs {
  std::vector<ad::Var> representations;
  std::vector<ad::Var> unimodal_logits;
  ad::Var fusion_logits;
};

JointOutputs joint_forward(const JointParams& params, const std::vector<std::shared_ptr<const SparseMatrix>>& adjacency,
                           const std::vector<ad::Var>& features);

struct JointLoss {
  ad::Var total;
  std::vector<double> head_losses;  // M unimodal heads, then the multimodal head
};

/// sum_m k^m L^m + multimodal_weight L^{M+1}; coefficients are constants.
JointLoss joint_loss(const JointOutputs& outputs, const Labels& labels, const Rows& rows,
                     const CoefficientState& coefficients);

struct StepResult {
  std::vector<double> head_losses;
  double total_loss = 0.0;
  std::vector<Matrix> unimodal_logits;  // before the update
  Matrix fusion_logits;
};

/// Owns the trainable state of a joint model.
class JointTrainer {
 public:
  JointTrainer(const JointModel& model, const std::vector<const Matrix*>& features, const Labels& labels,
               const OptimizerConfig& optimizer);

  /// One full-batch update on `rows`, backpropagating the weighted sum
  /// through every encoder at once.
  StepResult joint_step(const Rows& rows, const CoefficientState& coefficients);

  JointModel snapshot() const;
  /// Parameter values in JointParams::all() order.
  std::vector<Matrix> values() const;
  JointModel model_from(const std::vector<Matrix>& values) const;
  const JointParams& params() const { return params_; }

 private:
  JointModel shape_;
  JointParams params_;
  std::vector<std::shared_ptr<const SparseMatrix>> adjacency_;
  std::vector<ad::Var> features_;
  const Labels& labels_;
  GradientDescent optimizer_;
};

struct BalanceEpoch {
  int epoch = 0;
  std::vector<double> head_losses;
  double total_loss = 0.0;
  std::vector<double> r;
  std::vector<double> k;
  std::vector<double> val_macro_f1;  // M unimodal heads, then the multimodal head
};

struct TrainReport {
  std::vector<std::string> head_names;
  std::vector<BalanceEpoch> epochs;
  int best_epoch = -1;
  double best_val_macro_f1 = -1.0;
  std::vector<ClassificationMetrics> test_metrics;  // per head at the selected epoch
  std::vector<std::string> notes;
};

struct BalancedResult {
  JointModel model;
  TrainReport report;
};

/// Joint training loop. Coefficients are refreshed from validation macro F1
/// every `reweight_interval` epochs; the returned model is the epoch with the
/// best multimodal validation macro F1.
BalancedResult train_balanced(const JointModel& init, const std::vector<const Matrix*>& features,
                              const Labels& labels, const SplitMasks& masks, const BalanceConfig& config,
                              const OptimizerConfig& optimizer);

struct JointPrediction {
  std::vector<Matrix> unimodal_probabilities;
  Matrix fusion_probabilities;
};

JointPrediction predict_joint(const JointModel& model, const std::vector<const Matrix*>& features);

}  // namespace modbal
