#include "commands.hpp"

#include "modbal/checkpoint.hpp"
#include "modbal/pipeline.hpp"
#include "modbal/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

namespace modbal::cli {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path))
    throw DataError("missing " + path.string() + "; run `modbal " + producer + "` with the same config first");
}

std::map<std::string, std::string> key_values(const fs::path& path) {
  std::map<std::string, std::string> out;
  for (auto& [k, v] : read_key_values(path)) out[k] = v;
  return out;
}

const std::string& lookup(const std::map<std::string, std::string>& kv, const std::string& key,
                          const fs::path& origin) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw DataError(origin.string() + " has no entry '" + key + "'");
  return it->second;
}

void add_metrics(KeyValueReport& r, const std::string& prefix, const ClassificationMetrics& m) {
  r.add(prefix + "accuracy", m.accuracy);
  r.add(prefix + "auc", m.auc);
  r.add(prefix + "macro_f1", m.macro_f1);
}

void meta_metrics(Checkpoint& c, const std::string& prefix, const ClassificationMetrics& m) {
  c.metadata[prefix + "accuracy"] = format_double(m.accuracy);
  c.metadata[prefix + "auc"] = format_double(m.auc);
  c.metadata[prefix + "macro_f1"] = format_double(m.macro_f1);
}

ClassificationMetrics metrics_from_meta(const Checkpoint& c, const std::string& prefix) {
  return {std::stod(c.meta(prefix + "accuracy")), std::stod(c.meta(prefix + "auc")),
          std::stod(c.meta(prefix + "macro_f1"))};
}

void add_warnings(KeyValueReport& r, const std::vector<std::string>& warnings) {
  r.add("warnings", static_cast<int>(warnings.size()));
  for (std::size_t i = 0; i < warnings.size(); ++i) r.add("warning." + std::to_string(i), warnings[i]);
}

std::vector<int> class_order(const Labels& labels) {
  std::vector<int> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return labels[a] < labels[b]; });
  return order;
}

Checkpoint stamped(const RunContext& ctx, const std::string& kind) {
  Checkpoint c;
  c.metadata["kind"] = kind;
  c.metadata["config_hash"] = ctx.hash;
  return c;
}

fs::path checkpoint_dir(const RunContext& ctx) {
  const auto dir = ctx.dir / "checkpoints";
  fs::create_directories(dir);
  return dir;
}

fs::path unimodal_checkpoint(const RunContext& ctx, const std::string& modality, EdgeSource edges) {
  return ctx.dir / "checkpoints" / ("unimodal_" + modality + "_" + to_string(edges) + ".ckpt");
}

fs::path student_checkpoint(const RunContext& ctx, const std::string& modality) {
  return ctx.dir / "checkpoints" / ("student_" + modality + ".ckpt");
}

struct Loaded {
  MultiOmicsDataset dataset;
  PreparedData data;
};

Loaded load_prepared(const RunContext& ctx) {
  Loaded l;
  l.dataset = load_dataset(ctx.config);
  l.data = prepare(l.dataset, ctx.config, 0);
  return l;
}

UnimodalResult unimodal_from_checkpoint(const RunContext& ctx, const std::string& modality) {
  const auto path = unimodal_checkpoint(ctx, modality, EdgeSource::fused);
  require(path, "train-unimodal --edges fused");
  const auto c = Checkpoint::load(path);
  if (c.meta("config_hash") != ctx.hash)
    throw DataError(path.string() + " was trained under a different config; rerun `modbal train-unimodal`");
  UnimodalResult r;
  r.modality = modality;
  r.edges = EdgeSource::fused;
  r.fit.model = get_model(c, "");
  r.fit.best_epoch = std::stoi(c.meta("best_epoch"));
  r.fit.best_val_macro_f1 = std::stod(c.meta("best_val_macro_f1"));
  r.test = metrics_from_meta(c, "test.");
  return r;
}

}  // namespace

RunContext open_run(const CommonOptions& options, const std::string& command) {
  RunContext ctx;
  ctx.plots = options.plots;
  if (!options.config_path.empty()) {
    ctx.config = load_run_config(options.config_path);
  } else {
    ctx.config.validate();
  }
  if (options.seed) ctx.config.seed = *options.seed;
  ctx.hash = config_hash(ctx.config);
  if (!options.out.empty()) {
    ctx.dir = options.out;
  } else if (!ctx.config.output_dir.empty()) {
    ctx.dir = ctx.config.output_dir;
  } else {
    const char* root = std::getenv("MODBAL_OUT_ROOT");
    ctx.dir = fs::path(root && *root ? root : "runs") / ctx.hash;
  }
  ctx.config.output_dir = ctx.dir;
  fs::create_directories(ctx.dir);

  const auto stamp = ctx.dir / "stamp.txt";
  if (fs::exists(stamp) && !options.force) {
    const auto kv = key_values(stamp);
    const auto it = kv.find("config_hash");
    if (it != kv.end() && it->second != ctx.hash)
      throw UsageError("run directory " + ctx.dir.string() + " holds results for config " + it->second +
                       ", not " + ctx.hash + "; choose another --out or pass --force");
  }
  KeyValueReport s;
  s.add("config_hash", ctx.hash);
  s.add("seed", ctx.config.seed);
  s.write(stamp);
  write_text(ctx.dir / "resolved_config.json", dump_run_config(ctx.config));
  std::cerr << "modbal " << command << ": run directory " << ctx.dir.string() << "\n";
  return ctx;
}

void cmd_generate(const CommonOptions& options, const std::string& spec_path) {
  SyntheticSpec spec;
  if (!spec_path.empty()) {
    spec = parse_synthetic_spec(read_text(spec_path), spec_path);
    if (options.seed) spec.seed = *options.seed;
  } else {
    RunConfig config = options.config_path.empty() ? RunConfig{} : load_run_config(options.config_path);
    if (options.seed) config.seed = *options.seed;
    if (config.dataset.source != DatasetSource::synthetic)
      throw UsageError("generate needs a synthetic dataset section or --spec");
    spec = config.resolved_synthetic();
  }
  if (options.out.empty()) throw UsageError("generate needs --out DIR");
  const fs::path dir = options.out;
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!options.force) throw UsageError(dir.string() + " exists and is not empty; pass --force to overwrite");
  }
  fs::create_directories(dir);

  const auto ds = generate_synthetic(spec);
  ManifestEntry manifest;
  for (const auto& m : ds.modalities) {
    const std::string file = m.name + ".csv";
    write_modality_csv(dir / file, m, ds.sample_ids);
    manifest.modalities.push_back({m.name, file});
  }
  write_labels_csv(dir / "labels.csv", ds);
  manifest.labels = "labels.csv";
  manifest.class_names = ds.class_names;
  write_manifest(dir / "manifest.json", manifest);
  write_text(dir / "spec.json", dump_synthetic_spec(spec));
  std::cout << "wrote " << ds.samples() << " samples, " << ds.num_classes() << " classes, "
            << ds.modalities.size() << " modalities to " << dir.string() << "\n";
}

void cmd_baseline(const CommonOptions& options) {
  const auto ctx = open_run(options, "baseline");
  const auto dataset = load_dataset(ctx.config);
  dataset.validate();
  std::vector<std::string> warnings = dataset.warnings;
  std::vector<PreparedSplit> splits;
  for (int r = 0; r < ctx.config.split.repeats; ++r) {
    const auto masks = split_for(ctx.config, dataset.labels, r);
    splits.push_back(prepare_features(dataset, masks, ctx.config, r, warnings));
  }
  const auto rows = logistic_baseline(splits, dataset.labels, dataset.num_classes(), ctx.config.baseline);

  CsvTable table({"modalities", "accuracy", "auc", "macro_f1"});
  CsvTable raw({"modalities", "accuracy_mean", "accuracy_std", "auc_mean", "auc_std", "macro_f1_mean",
                "macro_f1_std"});
  for (const auto& r : rows) {
    table.row({r.combination, format_summary(r.accuracy), format_summary(r.auc), format_summary(r.macro_f1)});
    raw.row({r.combination, format_double(r.accuracy.mean), format_double(r.accuracy.std), format_double(r.auc.mean),
             format_double(r.auc.std), format_double(r.macro_f1.mean), format_double(r.macro_f1.std)});
    std::cout << r.combination << "  acc " << format_summary(r.accuracy) << "  auc " << format_summary(r.auc)
              << "  macro-F1 " << format_summary(r.macro_f1) << "\n";
  }
  table.write(ctx.dir / "baseline.csv");
  raw.write(ctx.dir / "baseline_raw.csv");
  KeyValueReport report;
  report.add("samples", static_cast<int>(dataset.samples()));
  report.add("repeats", ctx.config.split.repeats);
  for (std::size_t m = 0; m < dataset.modalities.size(); ++m)
    report.add("features." + dataset.modalities[m].name, static_cast<int>(dataset.modalities[m].features()));
  add_warnings(report, warnings);
  report.write(ctx.dir / "baseline_report.txt");
}

void cmd_fuse(const CommonOptions& options) {
  const auto ctx = open_run(options, "fuse");
  const auto l = load_prepared(ctx);
  const auto& d = l.data;
  KeyValueReport report;
  report.add("mu", d.snf.mu);
  report.add("k_neighbors", d.snf.k_neighbors);
  report.add("local_scale", to_string(d.snf.local_scale));
  report.add("iterations_run", d.fusion.iterations_run);
  report.add("converged", d.fusion.converged ? "true" : "false");
  report.add("relative_change", d.fusion.relative_change);
  const auto order = class_order(d.labels);
  for (std::size_t m = 0; m < d.modality_count(); ++m) {
    const auto p = normalize_P(d.networks[m]);
    report.add("within_class." + d.features[m].name, mean_within_class_similarity(p.matrix, d.labels));
    if (ctx.plots) write_heatmap_pgm(ctx.dir / ("heatmap_" + d.features[m].name + ".pgm"), p.matrix, order);
  }
  report.add("within_class.fused", mean_within_class_similarity(d.fusion.network.matrix, d.labels));
  if (ctx.plots) write_heatmap_pgm(ctx.dir / "heatmap_fused.pgm", d.fusion.network.matrix, order);
  add_warnings(report, d.warnings);
  report.write(ctx.dir / "fusion_report.txt");

  std::vector<std::string> header{"sample_id"};
  header.insert(header.end(), l.dataset.sample_ids.begin(), l.dataset.sample_ids.end());
  CsvTable net(header);
  for (Eigen::Index i = 0; i < d.fusion.network.size(); ++i) {
    std::vector<std::string> row{l.dataset.sample_ids[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < d.fusion.network.size(); ++j) row.push_back(format_double(d.fusion.network.matrix(i, j)));
    net.row(std::move(row));
  }
  net.write(ctx.dir / "fused_network.csv");
  std::cout << "fusion: " << d.fusion.iterations_run << " iterations, "
            << (d.fusion.converged ? "converged" : "iteration limit reached") << "\n";
}

void cmd_train_unimodal(const CommonOptions& options, const std::string& modality, const std::string& edges_name) {
  const EdgeSource edges = parse_edge_source(edges_name);
  const auto ctx = open_run(options, "train-unimodal");
  const auto l = load_prepared(ctx);
  const auto& d = l.data;
  std::vector<std::size_t> targets;
  if (modality.empty()) {
    targets.resize(d.modality_count());
    std::iota(targets.begin(), targets.end(), 0);
  } else {
    targets.push_back(d.modality_index(modality));
  }
  checkpoint_dir(ctx);

  std::vector<UnimodalResult> runs;
  CsvTable summary({"node", "edge", "accuracy", "auc", "macro_f1", "best_epoch", "best_val_macro_f1"});
  for (std::size_t m : targets) {
    auto r = run_unimodal(d, m, edges, ctx.config);
    const std::string stem = "unimodal_" + r.modality + "_" + to_string(edges);
    const std::string edge_label = edges == EdgeSource::fused ? "fused" : r.modality;

    KeyValueReport report;
    report.add("node", r.modality);
    report.add("edge", edge_label);
    report.add("adjacency_epsilon", r.fit.model.adjacency.epsilon);
    report.add("best_epoch", r.fit.best_epoch);
    report.add("best_val_macro_f1", r.fit.best_val_macro_f1);
    add_metrics(report, "test.", r.test);
    report.write(ctx.dir / (stem + ".txt"));

    CsvTable trace({"epoch", "train_loss", "val_loss", "val_macro_f1"});
    for (const auto& e : r.fit.trace)
      trace.row({std::to_string(e.epoch), format_double(e.train_loss), format_double(e.val_loss),
                 format_double(e.val_macro_f1)});
    trace.write(ctx.dir / (stem + "_trace.csv"));

    auto ckpt = stamped(ctx, "unimodal");
    ckpt.metadata["modality"] = r.modality;
    ckpt.metadata["edges"] = to_string(edges);
    ckpt.metadata["best_epoch"] = std::to_string(r.fit.best_epoch);
    ckpt.metadata["best_val_macro_f1"] = format_double(r.fit.best_val_macro_f1);
    meta_metrics(ckpt, "test.", r.test);
    put_model(ckpt, "", r.fit.model);
    ckpt.save(unimodal_checkpoint(ctx, r.modality, edges));

    summary.row({r.modality, edge_label, format_double(r.test.accuracy), format_double(r.test.auc),
                 format_double(r.test.macro_f1), std::to_string(r.fit.best_epoch),
                 format_double(r.fit.best_val_macro_f1)});
    std::cout << "Node: " << r.modality << "  Edge: " << edge_label << "  acc " << r.test.accuracy << "  auc "
              << r.test.auc << "  macro-F1 " << r.test.macro_f1 << "\n";
    runs.push_back(std::move(r));
  }
  if (modality.empty()) {
    summary.write(ctx.dir / ("unimodal_" + to_string(edges) + "_summary.csv"));
    if (ctx.plots) {
      std::vector<std::vector<double>> bars;
      for (const auto& r : runs) bars.push_back({r.test.macro_f1});
      write_bar_chart_ppm(ctx.dir / ("unimodal_" + to_string(edges) + "_macro_f1.ppm"), bars);
    }
  }
  if (modality.empty() && edges == EdgeSource::fused) {
    const auto state = learning_state_of(runs, ctx.config, d.num_classes());
    KeyValueReport states;
    states.add("gamma", ctx.config.balance.gamma);
    states.add("threshold", ctx.config.balance.gamma / d.num_classes());
    states.add("strong", runs[static_cast<std::size_t>(state.strong)].modality);
    for (std::size_t m = 0; m < runs.size(); ++m) {
      states.add("val_macro_f1." + runs[m].modality, state.macro_f1[m]);
      states.add("category." + runs[m].modality, to_string(state.category[m]));
    }
    states.write(ctx.dir / "learning_states.txt");
  }
}

void cmd_distill(const CommonOptions& options) {
  const auto ctx = open_run(options, "distill");
  require(ctx.dir / "learning_states.txt", "train-unimodal");
  const auto l = load_prepared(ctx);
  const auto& d = l.data;
  std::vector<UnimodalResult> fused;
  for (const auto& f : d.features) fused.push_back(unimodal_from_checkpoint(ctx, f.name));

  const auto run = run_distillation(d, fused, ctx.config, true);
  checkpoint_dir(ctx);
  KeyValueReport report;
  report.add("teacher", d.features[run.teacher].name);
  report.add("mi_gate", ctx.config.distill.mi_gate);
  for (const auto& s : run.students) {
    const std::string p = "student." + s.modality + ".";
    report.add(p + "category", to_string(s.category));
    report.add(p + "mutual_information", s.mutual_information);
    report.add(p + "distilled", s.distilled ? "true" : "false");
    report.add(p + "note", s.note);
    report.add(p + "best_epoch", s.student.best_epoch);
    report.add(p + "best_val_macro_f1", s.student.best_val_macro_f1);
    add_metrics(report, p + "test.", s.student_test);
    if (s.plain) {
      report.add(p + "plain.best_val_macro_f1", s.plain->best_val_macro_f1);
      add_metrics(report, p + "plain.test.", *s.plain_test);
    }
    for (std::size_t i = 0; i < s.mi_warnings.size(); ++i) report.add(p + "mi_warning." + std::to_string(i), s.mi_warnings[i]);

    if (s.distilled) {
      CsvTable trace({"epoch", "total", "ce", "kl", "re", "val_macro_f1"});
      for (const auto& e : s.student.trace)
        trace.row({std::to_string(e.epoch), format_double(e.train_loss), format_double(e.components.at(0)),
                   format_double(e.components.at(1)), format_double(e.components.at(2)),
                   format_double(e.val_macro_f1)});
      trace.write(ctx.dir / ("distill_" + s.modality + "_trace.csv"));
    }
    auto ckpt = stamped(ctx, "student");
    ckpt.metadata["modality"] = s.modality;
    ckpt.metadata["edges"] = "fused";
    ckpt.metadata["distilled"] = s.distilled ? "1" : "0";
    ckpt.metadata["best_epoch"] = std::to_string(s.student.best_epoch);
    ckpt.metadata["best_val_macro_f1"] = format_double(s.student.best_val_macro_f1);
    meta_metrics(ckpt, "test.", s.student_test);
    put_model(ckpt, "", s.student.model);
    ckpt.save(student_checkpoint(ctx, s.modality));
    std::cout << s.modality << " (" << to_string(s.category) << ", MI " << s.mutual_information << " nats): "
              << s.note << "; val macro-F1 " << s.student.best_val_macro_f1;
    if (s.plain) std::cout << " vs " << s.plain->best_val_macro_f1 << " without the teacher";
    std::cout << "\n";
  }
  report.write(ctx.dir / "distill_report.txt");
}

void cmd_train_balanced(const CommonOptions& options) {
  const auto ctx = open_run(options, "train-balanced");
  const auto report_path = ctx.dir / "distill_report.txt";
  require(report_path, "distill");
  const auto l = load_prepared(ctx);
  const auto& d = l.data;
  std::vector<UnimodalResult> fused;
  for (const auto& f : d.features) fused.push_back(unimodal_from_checkpoint(ctx, f.name));

  const auto kv = key_values(report_path);
  DistillRun distill;
  distill.teacher = d.modality_index(lookup(kv, "teacher", report_path));
  for (std::size_t m = 0; m < d.modality_count(); ++m) {
    if (m == distill.teacher) continue;
    const auto path = student_checkpoint(ctx, d.features[m].name);
    require(path, "distill");
    const auto c = Checkpoint::load(path);
    if (c.meta("config_hash") != ctx.hash)
      throw DataError(path.string() + " was produced under a different config; rerun `modbal distill`");
    StudentOutcome s;
    s.modality = d.features[m].name;
    s.distilled = c.meta("distilled") == "1";
    s.student.model = get_model(c, "");
    distill.students.push_back(std::move(s));
  }
  const auto init = initial_joint_model(d, fused, distill, ctx.config);
  const auto result = run_balanced(d, init, ctx.config, ctx.config.balance.reweight);
  const auto& rep = result.report;

  KeyValueReport out;
  out.add("reweight", ctx.config.balance.reweight ? "true" : "false");
  out.add("best_epoch", rep.best_epoch);
  out.add("best_val_macro_f1", rep.best_val_macro_f1);
  const auto k_mean = mean_coefficients(rep);
  for (std::size_t m = 0; m < k_mean.size(); ++m) out.add("mean_k." + rep.head_names[m], k_mean[m]);
  for (std::size_t h = 0; h < rep.head_names.size(); ++h)
    add_metrics(out, "test." + rep.head_names[h] + ".", rep.test_metrics[h]);
  for (std::size_t i = 0; i < rep.notes.size(); ++i) out.add("note." + std::to_string(i), rep.notes[i]);
  out.write(ctx.dir / "balanced_report.txt");

  std::vector<std::string> header{"epoch", "total_loss"};
  for (const auto& h : rep.head_names) header.push_back("loss." + h);
  for (std::size_t m = 0; m + 1 < rep.head_names.size(); ++m) header.push_back("r." + rep.head_names[m]);
  for (std::size_t m = 0; m + 1 < rep.head_names.size(); ++m) header.push_back("k." + rep.head_names[m]);
  for (const auto& h : rep.head_names) header.push_back("val_macro_f1." + h);
  CsvTable trace(header);
  for (const auto& e : rep.epochs) {
    std::vector<std::string> row{std::to_string(e.epoch), format_double(e.total_loss)};
    for (double v : e.head_losses) row.push_back(format_double(v));
    for (double v : e.r) row.push_back(format_double(v));
    for (double v : e.k) row.push_back(format_double(v));
    for (double v : e.val_macro_f1) row.push_back(format_double(v));
    trace.row(std::move(row));
  }
  trace.write(ctx.dir / "balanced_trace.csv");

  checkpoint_dir(ctx);
  auto ckpt = stamped(ctx, "joint");
  ckpt.metadata["best_epoch"] = std::to_string(rep.best_epoch);
  for (std::size_t h = 0; h < rep.head_names.size(); ++h)
    meta_metrics(ckpt, "test." + rep.head_names[h] + ".", rep.test_metrics[h]);
  put_joint(ckpt, result.model);
  ckpt.save(ctx.dir / "checkpoints" / "joint.ckpt");

  if (ctx.plots) {
    std::vector<std::vector<double>> bars;
    for (const auto& m : rep.test_metrics) bars.push_back({m.macro_f1});
    write_bar_chart_ppm(ctx.dir / "balanced_macro_f1.ppm", bars);
  }
  for (std::size_t h = 0; h < rep.head_names.size(); ++h)
    std::cout << rep.head_names[h] << "  acc " << rep.test_metrics[h].accuracy << "  auc " << rep.test_metrics[h].auc
              << "  macro-F1 " << rep.test_metrics[h].macro_f1 << "\n";
}

void cmd_evaluate(const CommonOptions& options, const std::string& checkpoint) {
  if (checkpoint.empty()) throw UsageError("evaluate needs --checkpoint PATH");
  const auto ctx = open_run(options, "evaluate");
  const auto c = Checkpoint::load(checkpoint);
  if (c.meta("config_hash") != ctx.hash)
    throw UsageError(checkpoint + " was produced under config " + c.meta("config_hash") + ", not " + ctx.hash +
                     "; pass the same --config and --seed");
  const auto l = load_prepared(ctx);
  const auto& d = l.data;
  const Rows test = d.masks.test_rows();
  const Labels truth = take(d.labels, test);

  KeyValueReport report;
  report.add("checkpoint", fs::path(checkpoint).filename().string());
  report.add("kind", c.meta("kind"));
  std::vector<std::pair<std::string, ClassificationMetrics>> results;
  if (c.meta("kind") == "joint") {
    const auto model = get_joint(c);
    std::vector<const Matrix*> features;
    for (const auto& name : model.names) features.push_back(&d.features[d.modality_index(name)].values);
    const auto pred = predict_joint(model, features);
    for (std::size_t m = 0; m < model.names.size(); ++m)
      results.emplace_back(model.names[m],
                           evaluate_predictions(truth, take_rows(pred.unimodal_probabilities[m], test), d.num_classes()));
    results.emplace_back("multimodal",
                         evaluate_predictions(truth, take_rows(pred.fusion_probabilities, test), d.num_classes()));
  } else {
    const auto model = get_model(c, "");
    const auto& x = d.features[d.modality_index(c.meta("modality"))];
    results.emplace_back(x.name, evaluate_on(model, x.values, d.labels, test));
  }
  for (const auto& [name, m] : results) {
    add_metrics(report, "test." + name + ".", m);
    std::cout << name << "  acc " << m.accuracy << "  auc " << m.auc << "  macro-F1 " << m.macro_f1 << "\n";
  }
  const auto dir = ctx.dir / "evaluation";
  fs::create_directories(dir);
  report.write(dir / (fs::path(checkpoint).stem().string() + ".txt"));
}

}  // namespace modbal::cli
