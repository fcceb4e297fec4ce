#pragma once

// End-to-end stages shared by the command-line tool and the experiment
// harnesses: data preparation, unimodal encoders, distillation and joint
// training.

#include "modbal/config.hpp"

#include <optional>
#include <string>
#include <vector>

namespace modbal {

/// Synthetic generation or CSV loading, per the config's dataset section.
MultiOmicsDataset load_dataset(const RunConfig& config);

/// Stratified split for one repeat; repeat r always gives the same masks.
SplitMasks split_for(const RunConfig& config, const Labels& labels, int repeat);

/// Reduction (fit on train rows) followed by optional standardization.
PreparedSplit prepare_features(const MultiOmicsDataset& dataset, const SplitMasks& masks, const RunConfig& config,
                               int repeat, std::vector<std::string>& warnings);

/// Features plus every similarity network the encoders need.
struct PreparedData {
  std::vector<ModalityMatrix> features;
  Labels labels;
  std::vector<std::string> class_names;
  SplitMasks masks;
  SnfParams snf;
  std::vector<SimilarityNetwork> networks;  // per-modality W
  FusionResult fusion;
  std::vector<std::string> warnings;
  int repeat = 0;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::size_t modality_count() const { return features.size(); }
  std::size_t modality_index(const std::string& name) const;
  std::vector<const Matrix*> feature_ptrs() const;
};

PreparedData prepare(const MultiOmicsDataset& dataset, const RunConfig& config, int repeat = 0);

enum class EdgeSource { self, fused };
std::string to_string(EdgeSource e);
EdgeSource parse_edge_source(const std::string& s);

struct UnimodalResult {
  std::string modality;
  EdgeSource edges = EdgeSource::fused;
  EncoderFit fit;
  ClassificationMetrics test;
};

/// Cross-entropy encoder on one modality's node features. Self edges use the
/// modality's own similarity network; fused edges give the revised GCN.
UnimodalResult run_unimodal(const PreparedData& data, std::size_t modality, EdgeSource edges,
                            const RunConfig& config);

/// Categories from validation macro F1 of the fused-edge encoders.
LearningState learning_state_of(const std::vector<UnimodalResult>& runs, const RunConfig& config, int num_classes);

struct StudentOutcome {
  std::string modality;
  ModalityCategory category = ModalityCategory::weak;
  double mutual_information = 0.0;
  std::vector<std::string> mi_warnings;
  bool distilled = false;
  std::string note;
  /// Distilled encoder when `distilled`, otherwise the cross-entropy one.
  EncoderFit student;
  ClassificationMetrics student_test;
  /// Cross-entropy encoder from the same initial weights, for comparison.
  std::optional<EncoderFit> plain;
  std::optional<ClassificationMetrics> plain_test;
};

struct DistillRun {
  LearningState state;
  std::size_t teacher = 0;
  TeacherSnapshot snapshot;
  std::vector<StudentOutcome> students;  // every non-strong modality
};

/// Takes the strong modality's fused-edge encoder as the teacher and
/// pretrains every weak modality (and gated low-information ones) against
/// it. `fused_runs` holds one fused-edge result per modality, in order.
/// With `compare_plain`, each distilled student also gets a cross-entropy
/// twin from identical initial weights.
DistillRun run_distillation(const PreparedData& data, const std::vector<UnimodalResult>& fused_runs,
                            const RunConfig& config, bool compare_plain);

/// Joint model from the pretrained encoders: teacher for the strong
/// modality, distilled students for the rest. Modalities that were not
/// distilled start from fresh weights.
JointModel initial_joint_model(const PreparedData& data, const std::vector<UnimodalResult>& fused_runs,
                               const DistillRun& distill, const RunConfig& config);

BalancedResult run_balanced(const PreparedData& data, const JointModel& init, const RunConfig& config,
                            bool reweight);

/// Mean over epochs of each modality's coefficient k.
std::vector<double> mean_coefficients(const TrainReport& report);

}  // namespace modbal
