#include "modbal/pipeline.hpp"

namespace modbal {

namespace {

std::string repeat_tag(const std::string& stage, const std::string& name, int repeat) {
  return stage + "/" + name + "/" + std::to_string(repeat);
}

}  // namespace

MultiOmicsDataset load_dataset(const RunConfig& config) {
  if (config.dataset.source == DatasetSource::synthetic) return generate_synthetic(config.resolved_synthetic());
  const auto manifest = load_manifest(config.dataset.manifest);
  return load_csv_dataset(manifest.modalities, manifest.labels, manifest.class_names);
}

SplitMasks split_for(const RunConfig& config, const Labels& labels, int repeat) {
  Rng rng = Rng(config.seed).derive(repeat_tag("split", "", repeat));
  return stratified_split(labels, config.split.fractions, rng);
}

PreparedSplit prepare_features(const MultiOmicsDataset& dataset, const SplitMasks& masks, const RunConfig& config,
                               int repeat, std::vector<std::string>& warnings) {
  PreparedSplit out;
  out.masks = masks;
  for (const auto& m : dataset.modalities) {
    Rng rng = Rng(config.seed).derive(repeat_tag("reduce", m.name, repeat));
    auto reduced = reduce_features(m, masks.train, config.reduction, rng);
    for (auto& w : reduced.warnings) warnings.push_back(std::move(w));
    out.modalities.push_back(config.standardize ? standardize(reduced.reduced, masks.train)
                                                : std::move(reduced.reduced));
  }
  return out;
}

std::size_t PreparedData::modality_index(const std::string& name) const {
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].name == name) return i;
  std::string known;
  for (const auto& f : features) known += (known.empty() ? "" : ", ") + f.name;
  throw DataError("unknown modality '" + name + "' (available: " + known + ")");
}

std::vector<const Matrix*> PreparedData::feature_ptrs() const {
  std::vector<const Matrix*> out;
  for (const auto& f : features) out.push_back(&f.values);
  return out;
}

PreparedData prepare(const MultiOmicsDataset& dataset, const RunConfig& config, int repeat) {
  dataset.validate();
  PreparedData data;
  data.repeat = repeat;
  data.labels = dataset.labels;
  data.class_names = dataset.class_names;
  data.warnings = dataset.warnings;
  data.masks = split_for(config, dataset.labels, repeat);
  data.features = prepare_features(dataset, data.masks, config, repeat, data.warnings).modalities;
  data.snf = config.snf.resolve(dataset.samples());
  for (const auto& f : data.features) {
    data.networks.push_back(scaled_exponential_similarity(f, data.snf));
    for (const auto& w : data.networks.back().warnings) data.warnings.push_back(f.name + ": " + w);
  }
  std::vector<SimilarityNetwork> to_fuse;
  if (config.snf.fuse_modalities.empty()) {
    to_fuse = data.networks;
  } else {
    for (const auto& name : config.snf.fuse_modalities) to_fuse.push_back(data.networks.at(data.modality_index(name)));
  }
  if (to_fuse.size() >= 2) {
    data.fusion = snf_fuse(to_fuse, data.snf);
  } else {
    // A single network has nothing to diffuse against; it stands in for the fused one.
    data.fusion.network = normalize_P(to_fuse.front());
    data.fusion.network.kind = NetworkKind::fused;
    data.warnings.push_back("single modality: fused network is its normalized similarity");
  }
  for (const auto& w : data.fusion.network.warnings) data.warnings.push_back("fusion: " + w);
  return data;
}

std::string to_string(EdgeSource e) { return e == EdgeSource::self ? "self" : "fused"; }

EdgeSource parse_edge_source(const std::string& s) {
  if (s == "self") return EdgeSource::self;
  if (s == "fused") return EdgeSource::fused;
  throw DataError("unknown edge source '" + s + "' (expected self or fused)");
}

UnimodalResult run_unimodal(const PreparedData& data, std::size_t modality, EdgeSource edges,
                            const RunConfig& config) {
  const auto& x = data.features.at(modality);
  Rng rng = Rng(config.seed).derive(repeat_tag("unimodal-" + to_string(edges), x.name, data.repeat));
  GcnModel init = edges == EdgeSource::fused
                      ? build_rgcn(x, data.fusion.network, data.num_classes(), config.encoder, rng)
                      : build_gcn(x, data.networks.at(modality), data.num_classes(), config.encoder, rng);
  init.edge_source = edges == EdgeSource::fused ? "fused" : x.name;
  UnimodalResult out;
  out.modality = x.name;
  out.edges = edges;
  out.fit = train_unimodal(init, x.values, data.labels, data.masks, config.optimizer);
  out.test = evaluate_on(out.fit.model, x.values, data.labels, data.masks.test_rows());
  return out;
}

LearningState learning_state_of(const std::vector<UnimodalResult>& runs, const RunConfig& config,
                                int num_classes) {
  std::vector<double> f;
  for (const auto& r : runs) f.push_back(r.fit.best_val_macro_f1);
  return categorize(f, config.balance.gamma, num_classes);
}

DistillRun run_distillation(const PreparedData& data, const std::vector<UnimodalResult>& fused_runs,
                            const RunConfig& config, bool compare_plain) {
  if (fused_runs.size() != data.modality_count())
    throw ContractError("run_distillation: need one fused-edge encoder per modality");
  for (std::size_t m = 0; m < fused_runs.size(); ++m)
    if (fused_runs[m].edges != EdgeSource::fused || fused_runs[m].modality != data.features[m].name)
      throw ContractError("run_distillation: encoder " + std::to_string(m) + " is not the fused-edge model of " +
                          data.features[m].name);

  DistillRun out;
  out.state = learning_state_of(fused_runs, config, data.num_classes());
  out.teacher = static_cast<std::size_t>(out.state.strong);
  const auto& teacher_x = data.features[out.teacher];
  out.snapshot = snapshot_of(fused_runs[out.teacher].fit.model, teacher_x.values, teacher_x.name);
  const Labels strong_predictions = argmax_rows(out.snapshot.probabilities);

  for (std::size_t m = 0; m < data.modality_count(); ++m) {
    if (m == out.teacher) continue;
    const auto& x = data.features[m];
    StudentOutcome s;
    s.modality = x.name;
    s.category = out.state.category[m];
    // The modality's own classifier must not see the fused graph, which
    // already carries the other modalities' structure. MI is taken on
    // validation rows: on training rows both classifiers reproduce the labels.
    const auto own_model = fit_logistic(x.values, data.labels, data.masks.train_rows(), data.num_classes(),
                                        config.baseline);
    const Rows val = data.masks.val_rows();
    const ModalityMatrix held_out{x.name, take_rows(x.values, val), {}};
    const Labels own = argmax_rows(own_model.predict_proba(held_out.values));
    auto mi = modality_mi(held_out, take(strong_predictions, val), config.mi_quantizer, own);
    s.mutual_information = mi.value;
    s.mi_warnings = std::move(mi.warnings);
    s.distilled = s.category == ModalityCategory::weak || s.mutual_information > config.distill.mi_gate;

    if (s.distilled) {
      const Rng rng = Rng(config.seed).derive(repeat_tag("student", x.name, data.repeat));
      Rng student_rng = rng;
      s.student = pretrain_student(x, data.fusion.network, out.snapshot, data.labels, data.masks, config.encoder,
                                   config.distill, {s.category, s.mutual_information}, student_rng);
      s.student.model.edge_source = "fused";
      s.student_test = evaluate_on(s.student.model, x.values, data.labels, data.masks.test_rows());
      if (compare_plain) {
        Rng plain_rng = rng;
        GcnModel init = build_rgcn(x, data.fusion.network, data.num_classes(), config.encoder, plain_rng);
        init.edge_source = "fused";
        s.plain = train_unimodal(init, x.values, data.labels, data.masks, config.distill.optimizer());
        s.plain_test = evaluate_on(s.plain->model, x.values, data.labels, data.masks.test_rows());
      }
      s.note = "distilled";
    } else {
      s.student = fused_runs[m].fit;
      s.student_test = fused_runs[m].test;
      s.note = "not distilled: low-information with mutual information at or below the gate";
    }
    out.students.push_back(std::move(s));
  }
  return out;
}

JointModel initial_joint_model(const PreparedData& data, const std::vector<UnimodalResult>& fused_runs,
                               const DistillRun& distill, const RunConfig& config) {
  std::vector<std::string> names;
  std::vector<GcnModel> encoders;
  std::size_t next_student = 0;
  for (std::size_t m = 0; m < data.modality_count(); ++m) {
    names.push_back(data.features[m].name);
    if (m == distill.teacher) {
      encoders.push_back(fused_runs[m].fit.model);
    } else {
      const auto& s = distill.students.at(next_student++);
      if (s.modality != data.features[m].name) throw ContractError("initial_joint_model: student order mismatch");
      if (s.distilled) {
        encoders.push_back(s.student.model);
      } else {
        // Excluded from pretraining, so it joins untrained.
        Rng fresh = Rng(config.seed).derive(repeat_tag("joint-fresh", s.modality, data.repeat));
        GcnModel g = build_rgcn(data.features[m], data.fusion.network, data.num_classes(), config.encoder, fresh);
        g.edge_source = "fused";
        encoders.push_back(std::move(g));
      }
    }
  }
  Rng rng = Rng(config.seed).derive(repeat_tag("joint", "", data.repeat));
  return make_joint_model(std::move(names), std::move(encoders), rng);
}

BalancedResult run_balanced(const PreparedData& data, const JointModel& init, const RunConfig& config,
                            bool reweight) {
  BalanceConfig balance = config.balance;
  balance.reweight = reweight;
  return train_balanced(init, data.feature_ptrs(), data.labels, data.masks, balance, config.optimizer);
}

std::vector<double> mean_coefficients(const TrainReport& report) {
  if (report.epochs.empty()) return {};
  std::vector<double> mean(report.epochs.front().k.size(), 0.0);
  for (const auto& e : report.epochs)
    for (std::size_t m = 0; m < mean.size(); ++m) mean[m] += e.k[m];
  for (auto& v : mean) v /= static_cast<double>(report.epochs.size());
  return mean;
}

}  // namespace modbal
