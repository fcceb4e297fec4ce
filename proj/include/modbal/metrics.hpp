#pragma once

// Classification metrics, learning-state categorization and plug-in mutual information.

#include "modbal/modality.hpp"

#include <string>
#include <vector>

namespace modbal {

/// counts(t, p): samples with truth t predicted as p.
struct ConfusionMatrix {
  Eigen::MatrixXi counts;

  static ConfusionMatrix from(const Labels& truth, const Labels& pred, int num_classes);
  long total() const { return counts.sum(); }
};

/// Unweighted mean of per-class F1. A class absent from both truth and
/// prediction contributes 0.
double macro_f1(const Labels& truth, const Labels& pred, int num_classes);
double accuracy(const Labels& truth, const Labels& pred);

struct AucResult {
  double value = 0.0;
  std::vector<int> skipped_classes;  // absent from truth, or with no negatives
};

/// Unweighted mean over classes of one-vs-rest rank AUC; tied scores count 1/2.
AucResult macro_ovr_auc(const Labels& truth, const Matrix& scores);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double auc = 0.0;
  double macro_f1 = 0.0;
};

/// Scores are row-stochastic class probabilities.
ClassificationMetrics evaluate_predictions(const Labels& truth, const Matrix& probabilities, int num_classes);

/// Subset of labels and probability rows.
Labels take(const Labels& labels, const Rows& rows);
Matrix take_rows(const Matrix& m, const Rows& rows);

enum class ModalityCategory { strong, weak, low_information };
std::string to_string(ModalityCategory c);

struct LearningState {
  std::vector<double> macro_f1;
  std::vector<ModalityCategory> category;
  int strong = 0;
};

/// strong = argmax F (lowest index on ties); low_information iff F <= gamma / C;
/// the rest weak.
LearningState categorize(const std::vector<double>& f_scores, double gamma, int num_classes);

struct OgrTrace {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
};

/// |(O_{e+n} - O_e) / (L^Va_e - L^Va_{e+n})| with O_e = L^Va_e - L^Tr_e.
double ogr_ratio(const OgrTrace& trace, int epoch, int window);

/// Plug-in estimate from the joint contingency table, in nats.
double mutual_information(const Labels& a, const Labels& b);
/// Plug-in entropy, in nats.
double entropy(const Labels& a);

enum class QuantizerKind {
  own_predictions,  // the modality's unimodal classifier labels
  pc1_quantiles,    // first principal component cut into equal-count bins
};

struct QuantizerConfig {
  QuantizerKind kind = QuantizerKind::own_predictions;
  int bins = 4;
};

struct MiEstimate {
  double value = 0.0;
  std::vector<std::string> warnings;
};

/// MI between a modality reduced to one discrete variable and the strong
/// modality's predicted labels. `own_predictions` is required by the default
/// quantizer and ignored otherwise.
MiEstimate modality_mi(const ModalityMatrix& modality, const Labels& strong_predictions,
                       const QuantizerConfig& quantizer, const Labels& own_predictions = {});

}  // namespace modbal
