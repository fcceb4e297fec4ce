#pragma once

// Full-batch gradient descent shared by every trainable component.

#include "modbal/graph_encoder.hpp"
#include "modbal/metrics.hpp"

#include <functional>
#include <vector>

namespace modbal {

struct OptimizerConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;  // 0 disables
  int epochs = 300;
  double weight_decay = 0.0;

  void validate() const;
};

/// Heavy-ball gradient descent: v <- momentum v + g; w <- w - lr v.
class GradientDescent {
 public:
  GradientDescent(std::vector<ad::Var> params, const OptimizerConfig& config);

  /// Applies one update from the gradients currently held by the parameters.
  void step();

 private:
  std::vector<ad::Var> params_;
  std::vector<Matrix> velocity_;
  OptimizerConfig config_;
};

/// Mean over `rows` of -log softmax(logits)[label].
ad::Var cross_entropy(const ad::Var& logits, const Labels& labels, const Rows& rows);

/// Value-only cross-entropy, used for validation traces.
double cross_entropy_value(const Matrix& logits, const Labels& labels, const Rows& rows);

Matrix softmax_rows(const Matrix& logits);

struct LossTerms {
  ad::Var total;
  std::vector<double> components;
};

/// Builds the training objective from the encoder's representation and logits.
using LossBuilder = std::function<LossTerms(const ad::Var& representation, const ad::Var& logits)>;

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_macro_f1 = 0.0;
  std::vector<double> components;
};

struct EncoderFit {
  GcnModel model;  // weights from the best-validation epoch
  int best_epoch = -1;
  double best_val_macro_f1 = -1.0;
  std::vector<EpochLog> trace;
};

/// Trains `init` on `loss`, selecting the epoch with the highest validation
/// macro F1 (earliest on ties).
EncoderFit fit_encoder(const GcnModel& init, const Matrix& x, const Labels& labels, const SplitMasks& masks,
                       const OptimizerConfig& config, const LossBuilder& loss);

/// Cross-entropy training on the train mask.
EncoderFit train_unimodal(const GcnModel& init, const Matrix& x, const Labels& labels, const SplitMasks& masks,
                          const OptimizerConfig& config);

/// Softmax probabilities of a trained encoder over all samples.
Matrix predict_proba(const GcnModel& model, const Matrix& x);

ClassificationMetrics evaluate_on(const GcnModel& model, const Matrix& x, const Labels& labels, const Rows& rows);

}  // namespace modbal
