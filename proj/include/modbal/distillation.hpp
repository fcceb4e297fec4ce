#pragma once

// Cross-modal self-distillation: a teacher trained on the strong modality
// guides students on weaker modalities through KL and representation losses.

#include "modbal/training.hpp"

#include <string>

namespace modbal {

/// Which samples the teacher-matching terms cover. Cross-entropy always uses
/// the train mask; teacher outputs carry no label information.
enum class DistillScope { train, all };

struct DistillConfig {
  double alpha1 = 1.0;  // cross-entropy
  double alpha2 = 0.5;  // KL(teacher || student)
  double alpha3 = 0.5;  // representation matching
  int epochs = 300;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double temperature = 1.0;
  double mi_gate = 0.2;  // nats
  DistillScope scope = DistillScope::all;

  void validate() const;
  OptimizerConfig optimizer() const;
};

struct TeacherSnapshot {
  Matrix representations;  // N x d
  Matrix probabilities;    // N x C
  std::string source;
};

struct DistillLossVars {
  ad::Var ce;
  ad::Var kl;
  ad::Var re;
};

/// Probabilities are clamped at 1e-12 before taking logs.
ad::Var kl_to_teacher(const ad::Var& student_logits, const Matrix& teacher_probabilities, const Rows& rows,
                      double temperature = 1.0);
/// mean over rows of ||h_T - h_S||^2 / d.
ad::Var representation_loss(const ad::Var& student_repr, const Matrix& teacher_repr, const Rows& rows);

/// All three terms averaged over the same masked samples.
DistillLossVars distill_losses(const ad::Var& student_logits, const ad::Var& student_repr,
                               const TeacherSnapshot& snapshot, const Labels& labels, const Rows& rows,
                               double temperature = 1.0);

struct TeacherResult {
  EncoderFit fit;
  TeacherSnapshot snapshot;
};

/// Trains an r-GCN on the strong modality by cross-entropy and captures its
/// outputs for every sample at the best-validation epoch.
TeacherResult pretrain_teacher(const ModalityMatrix& strong, const SimilarityNetwork& fused_edges,
                               const Labels& labels, const SplitMasks& masks, int num_classes,
                               const EncoderConfig& encoder, const OptimizerConfig& optimizer, Rng& rng);

TeacherSnapshot snapshot_of(const GcnModel& model, const Matrix& x, const std::string& source);

/// Whether a modality may be distilled: weak modalities always, low-information
/// ones only when their MI with the strong modality exceeds the gate.
struct StudentEligibility {
  ModalityCategory category = ModalityCategory::weak;
  double mutual_information = 0.0;
};

/// Trains an r-GCN student minimizing alpha1 CE + alpha2 KL + alpha3 RE.
/// Trace components are (CE, KL, RE) per epoch.
EncoderFit pretrain_student(const ModalityMatrix& weak, const SimilarityNetwork& fused_edges,
                            const TeacherSnapshot& snapshot, const Labels& labels, const SplitMasks& masks,
                            const EncoderConfig& encoder, const DistillConfig& config,
                            const StudentEligibility& eligibility, Rng& rng);

}  // namespace modbal
