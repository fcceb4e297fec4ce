#include "modbal/distillation.hpp"

#include <cmath>
#include <sstream>

namespace modbal {

namespace {
constexpr double kProbFloor = 1e-12;
}

void DistillConfig::validate() const {
  if (alpha1 < 0.0 || alpha2 < 0.0 || alpha3 < 0.0) throw ContractError("distill: loss weights must be >= 0");
  if (!(alpha1 + alpha2 + alpha3 > 0.0)) throw ContractError("distill: loss weights must not all be zero");
  if (!(temperature > 0.0)) throw ContractError("distill: temperature must be positive");
  optimizer().validate();
}

OptimizerConfig DistillConfig::optimizer() const {
  OptimizerConfig o;
  o.learning_rate = learning_rate;
  o.momentum = momentum;
  o.epochs = epochs;
  return o;
}

ad::Var kl_to_teacher(const ad::Var& student_logits, const Matrix& teacher_probabilities, const Rows& rows,
                      double temperature) {
  if (rows.empty()) throw ContractError("kl_to_teacher: empty mask");
  if (teacher_probabilities.rows() != student_logits->value.rows() ||
      teacher_probabilities.cols() != student_logits->value.cols())
    throw DimensionError("kl_to_teacher: teacher " + shape_string(teacher_probabilities) + " vs student " +
                         shape_string(student_logits->value));

  Matrix teacher = take_rows(teacher_probabilities, rows);
  if (temperature != 1.0) {
    const Matrix log_t = teacher.cwiseMax(kProbFloor).array().log().matrix() / temperature;
    teacher = softmax_rows(log_t);
  }
  // sum_c pT log pT is constant w.r.t. the student.
  double self_term = 0.0;
  for (Eigen::Index i = 0; i < teacher.rows(); ++i)
    for (Eigen::Index c = 0; c < teacher.cols(); ++c)
      if (teacher(i, c) > 0.0) self_term += teacher(i, c) * std::log(std::max(teacher(i, c), kProbFloor));
  const double n = static_cast<double>(rows.size());

  ad::Var logits = ad::select_rows(student_logits, rows);
  if (temperature != 1.0) logits = ad::scale(logits, 1.0 / temperature);
  const auto log_student = ad::clamp_min(ad::row_log_softmax(logits), std::log(kProbFloor));
  const auto cross = ad::sum(ad::hadamard(ad::constant(teacher), log_student));
  Matrix constant_part(1, 1);
  constant_part(0, 0) = self_term / n;
  return ad::add(ad::constant(constant_part), ad::scale(cross, -1.0 / n));
}

ad::Var representation_loss(const ad::Var& student_repr, const Matrix& teacher_repr, const Rows& rows) {
  if (rows.empty()) throw ContractError("representation_loss: empty mask");
  if (teacher_repr.rows() != student_repr->value.rows() || teacher_repr.cols() != student_repr->value.cols())
    throw DimensionError("representation_loss: teacher " + shape_string(teacher_repr) + " vs student " +
                         shape_string(student_repr->value));
  const auto diff = ad::sub(ad::select_rows(student_repr, rows), ad::constant(take_rows(teacher_repr, rows)));
  // mean over rows and columns == mean_i ||.||^2 / d
  return ad::mean(ad::hadamard(diff, diff));
}

DistillLossVars distill_losses(const ad::Var& student_logits, const ad::Var& student_repr,
                               const TeacherSnapshot& snapshot, const Labels& labels, const Rows& rows,
                               double temperature) {
  DistillLossVars out;
  out.ce = cross_entropy(student_logits, labels, rows);
  out.kl = kl_to_teacher(student_logits, snapshot.probabilities, rows, temperature);
  out.re = representation_loss(student_repr, snapshot.representations, rows);
  return out;
}

TeacherSnapshot snapshot_of(const GcnModel& model, const Matrix& x, const std::string& source) {
  const auto out = gcn_forward(model, x);
  return {out.representations, softmax_rows(out.logits), source};
}

TeacherResult pretrain_teacher(const ModalityMatrix& strong, const SimilarityNetwork& fused_edges,
                               const Labels& labels, const SplitMasks& masks, int num_classes,
                               const EncoderConfig& encoder, const OptimizerConfig& optimizer, Rng& rng) {
  const auto init = build_rgcn(strong, fused_edges, num_classes, encoder, rng);
  TeacherResult out;
  out.fit = train_unimodal(init, strong.values, labels, masks, optimizer);
  out.snapshot = snapshot_of(out.fit.model, strong.values, strong.name);
  return out;
}

EncoderFit pretrain_student(const ModalityMatrix& weak, const SimilarityNetwork& fused_edges,
                            const TeacherSnapshot& snapshot, const Labels& labels, const SplitMasks& masks,
                            const EncoderConfig& encoder, const DistillConfig& config,
                            const StudentEligibility& eligibility, Rng& rng) {
  config.validate();
  if (eligibility.category == ModalityCategory::strong)
    throw ContractError("pretrain_student: " + weak.name + " is the strong modality and cannot be a student");
  if (eligibility.category == ModalityCategory::low_information && !(eligibility.mutual_information > config.mi_gate)) {
    std::ostringstream msg;
    msg << "pretrain_student: " << weak.name << " is low-information and its mutual information with the strong "
        << "modality (" << eligibility.mutual_information << " nats) does not exceed the gate (" << config.mi_gate
        << "); skip distillation for it";
    throw ContractError(msg.str());
  }
  if (encoder.layer_dims.back() != snapshot.representations.cols())
    throw DimensionError("pretrain_student: student representation dim " + std::to_string(encoder.layer_dims.back()) +
                         " differs from teacher dim " + std::to_string(snapshot.representations.cols()));

  const auto init = build_rgcn(weak, fused_edges, static_cast<int>(snapshot.probabilities.cols()), encoder, rng);
  const Rows train = masks.train_rows();
  Rows teacher_rows = train;
  if (config.scope == DistillScope::all) {
    teacher_rows.resize(masks.size());
    for (std::size_t i = 0; i < teacher_rows.size(); ++i) teacher_rows[i] = static_cast<int>(i);
  }

  return fit_encoder(init, weak.values, labels, masks, config.optimizer(),
                     [&](const ad::Var& repr, const ad::Var& logits) {
                       auto ce = cross_entropy(logits, labels, train);
                       auto kl = kl_to_teacher(logits, snapshot.probabilities, teacher_rows, config.temperature);
                       auto re = representation_loss(repr, snapshot.representations, teacher_rows);
                       auto total = ad::add(ad::add(ad::scale(ce, config.alpha1), ad::scale(kl, config.alpha2)),
                                            ad::scale(re, config.alpha3));
                       return LossTerms{total, {ce->value(0, 0), kl->value(0, 0), re->value(0, 0)}};
                     });
}

}  // namespace modbal
