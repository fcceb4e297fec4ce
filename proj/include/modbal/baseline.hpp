#pragma once

// Multinomial logistic regression over every modality combination.

#include "modbal/metrics.hpp"
#include "modbal/modality.hpp"

#include <string>
#include <vector>

namespace modbal {

struct LogisticConfig {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 1e-3;

  void validate() const;
};

/// Softmax-affine classifier; the last row of `weights` is the bias.
struct LogisticModel {
  Matrix weights;

  Matrix predict_proba(const Matrix& x) const;
};

/// Full-batch gradient descent on mean cross-entropy + (l2 / 2) ||W||^2 (bias unpenalized).
LogisticModel fit_logistic(const Matrix& x, const Labels& labels, const Rows& rows, int num_classes,
                           const LogisticConfig& config);

/// One split's features, already reduced with that split's training rows.
struct PreparedSplit {
  std::vector<ModalityMatrix> modalities;
  SplitMasks masks;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over repeats
};

struct BaselineRow {
  std::string combination;  // e.g. "mRNA+RPPA"
  MetricSummary accuracy;
  MetricSummary auc;
  MetricSummary macro_f1;
};

/// Non-empty modality subsets: all singles, then pairs, ..., then the full set.
std::vector<std::vector<std::size_t>> modality_combinations(std::size_t count);

/// Test-set metrics for every modality combination, summarized over splits.
std::vector<BaselineRow> logistic_baseline(const std::vector<PreparedSplit>& splits, const Labels& labels,
                                           int num_classes, const LogisticConfig& config);

MetricSummary summarize(const std::vector<double>& values);

/// "0.8338 ± 0.0340"
std::string format_summary(const MetricSummary& s);

}  // namespace modbal
