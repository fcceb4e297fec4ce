#include "modbal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace modbal {

namespace {

void check_labels(const Labels& labels, int num_classes, const char* op) {
  for (int y : labels)
    if (y < 0 || y >= num_classes)
      throw ContractError(std::string(op) + ": label " + std::to_string(y) + " outside [0, " +
                          std::to_string(num_classes) + ")");
}

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

ConfusionMatrix ConfusionMatrix::from(const Labels& truth, const Labels& pred, int num_classes) {
  if (truth.size() != pred.size())
    throw ContractError("confusion matrix: " + std::to_string(truth.size()) + " truths vs " +
                        std::to_string(pred.size()) + " predictions");
  check_labels(truth, num_classes, "confusion matrix");
  check_labels(pred, num_classes, "confusion matrix");
  ConfusionMatrix cm;
  cm.counts = Eigen::MatrixXi::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) ++cm.counts(truth[i], pred[i]);
  return cm;
}

double macro_f1(const Labels& truth, const Labels& pred, int num_classes) {
  if (truth.empty()) throw ContractError("macro_f1: empty input");
  const auto cm = ConfusionMatrix::from(truth, pred, num_classes);
  double total = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    const double tp = cm.counts(c, c);
    const double actual = cm.counts.row(c).sum();
    const double predicted = cm.counts.col(c).sum();
    if (actual + predicted > 0) total += 2.0 * tp / (actual + predicted);
  }
  return total / num_classes;
}

double accuracy(const Labels& truth, const Labels& pred) {
  if (truth.empty() || truth.size() != pred.size()) throw ContractError("accuracy: empty or mismatched input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == pred[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

AucResult macro_ovr_auc(const Labels& truth, const Matrix& scores) {
  if (static_cast<Eigen::Index>(truth.size()) != scores.rows() || truth.empty())
    throw ContractError("macro_ovr_auc: " + std::to_string(truth.size()) + " labels vs " + shape_string(scores));
  const int num_classes = static_cast<int>(scores.cols());
  check_labels(truth, num_classes, "macro_ovr_auc");
  for (Eigen::Index r = 0; r < scores.rows(); ++r)
    if (std::abs(scores.row(r).sum() - 1.0) > 1e-6)
      throw ContractError("macro_ovr_auc: score row " + std::to_string(r) + " does not sum to 1");

  AucResult out;
  double total = 0.0;
  int used = 0;
  for (int c = 0; c < num_classes; ++c) {
    std::vector<double> col(truth.size());
    double pos = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      col[i] = scores(static_cast<Eigen::Index>(i), c);
      pos += truth[i] == c;
    }
    const double neg = static_cast<double>(truth.size()) - pos;
    if (pos == 0.0 || neg == 0.0) {
      out.skipped_classes.push_back(c);
      continue;
    }
    const auto ranks = average_ranks(col);
    double pos_rank_sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (truth[i] == c) pos_rank_sum += ranks[i];
    total += (pos_rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
    ++used;
  }
  if (used == 0) throw ContractError("macro_ovr_auc: no class has both positives and negatives");
  out.value = total / used;
  return out;
}

ClassificationMetrics evaluate_predictions(const Labels& truth, const Matrix& probabilities, int num_classes) {
  const Labels pred = argmax_rows(probabilities);
  ClassificationMetrics m;
  m.accuracy = accuracy(truth, pred);
  m.macro_f1 = macro_f1(truth, pred, num_classes);
  m.auc = macro_ovr_auc(truth, probabilities).value;
  return m;
}

Labels take(const Labels& labels, const Rows& rows) {
  Labels out;
  out.reserve(rows.size());
  for (int r : rows) out.push_back(labels[static_cast<std::size_t>(r)]);
  return out;
}

Matrix take_rows(const Matrix& m, const Rows& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

std::string to_string(ModalityCategory c) {
  switch (c) {
    case ModalityCategory::strong: return "strong";
    case ModalityCategory::weak: return "weak";
    case ModalityCategory::low_information: return "low_information";
  }
  return "unknown";
}

LearningState categorize(const std::vector<double>& f_scores, double gamma, int num_classes) {
  if (f_scores.empty()) throw ContractError("categorize: no modalities");
  if (!(gamma >= 1.0)) throw ContractError("categorize: gamma must be >= 1");
  LearningState state;
  state.macro_f1 = f_scores;
  state.strong = static_cast<int>(std::max_element(f_scores.begin(), f_scores.end()) - f_scores.begin());
  const double threshold = gamma / num_classes;
  for (std::size_t m = 0; m < f_scores.size(); ++m) {
    if (static_cast<int>(m) == state.strong)
      state.category.push_back(ModalityCategory::strong);
    else if (f_scores[m] <= threshold)
      state.category.push_back(ModalityCategory::low_information);
    else
      state.category.push_back(ModalityCategory::weak);
  }
  return state;
}

double ogr_ratio(const OgrTrace& trace, int epoch, int window) {
  if (trace.train_loss.size() != trace.val_loss.size()) throw ContractError("ogr_ratio: trace lengths differ");
  if (window < 1 || epoch < 0 || static_cast<std::size_t>(epoch + window) >= trace.val_loss.size())
    throw ContractError("ogr_ratio: epoch window outside trace");
  const auto e = static_cast<std::size_t>(epoch);
  const auto f = static_cast<std::size_t>(epoch + window);
  const double gap_start = trace.val_loss[e] - trace.train_loss[e];
  const double gap_end = trace.val_loss[f] - trace.train_loss[f];
  const double denom = trace.val_loss[e] - trace.val_loss[f];
  if (std::abs(denom) < 1e-12) throw ContractError("ogr_ratio: validation loss plateau makes the ratio undefined");
  return std::abs((gap_end - gap_start) / denom);
}

double mutual_information(const Labels& a, const Labels& b) {
  if (a.size() != b.size() || a.size() < 2) throw ContractError("mutual_information: need two equal-length samples");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    pa[a[i]] += 1.0;
    pb[b[i]] += 1.0;
  }
  double mi = 0.0;
  for (const auto& [key, count] : joint) {
    const double pj = count / n;
    mi += pj * std::log(pj / ((pa[key.first] / n) * (pb[key.second] / n)));
  }
  return std::max(mi, 0.0);
}

double entropy(const Labels& a) {
  std::map<int, double> counts;
  for (int v : a) counts[v] += 1.0;
  double h = 0.0;
  for (const auto& [v, c] : counts) {
    const double p = c / static_cast<double>(a.size());
    h -= p * std::log(p);
  }
  return h;
}

MiEstimate modality_mi(const ModalityMatrix& modality, const Labels& strong_predictions,
                       const QuantizerConfig& quantizer, const Labels& own_predictions) {
  if (static_cast<Eigen::Index>(strong_predictions.size()) != modality.samples())
    throw DimensionError("modality_mi: " + modality.name + " has " + std::to_string(modality.samples()) +
                         " samples but " + std::to_string(strong_predictions.size()) + " strong predictions");
  Labels discrete;
  if (quantizer.kind == QuantizerKind::own_predictions) {
    if (own_predictions.size() != strong_predictions.size())
      throw ContractError("modality_mi: own-prediction quantizer needs one prediction per sample");
    discrete = own_predictions;
  } else {
    if (quantizer.bins < 2) throw ContractError("modality_mi: need at least 2 bins");
    const Matrix centered = modality.values.rowwise() - modality.values.colwise().mean();
    const Matrix cov = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Vector top = eig.eigenvectors().col(eig.eigenvectors().cols() - 1);
    const Vector proj = centered * top;
    std::vector<int> order(static_cast<std::size_t>(proj.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return proj(x) < proj(y); });
    discrete.assign(order.size(), 0);
    if (proj.maxCoeff() - proj.minCoeff() > 0.0)
      for (std::size_t r = 0; r < order.size(); ++r)
        discrete[static_cast<std::size_t>(order[r])] =
            static_cast<int>(r * static_cast<std::size_t>(quantizer.bins) / order.size());
  }

  MiEstimate out;
  if (std::all_of(discrete.begin(), discrete.end(), [&](int v) { return v == discrete.front(); })) {
    out.warnings.push_back("quantizer for " + modality.name + " produced a constant; MI set to 0");
    return out;
  }
  out.value = mutual_information(discrete, strong_predictions);
  return out;
}

}  // namespace modbal
