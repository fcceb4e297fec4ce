// Acceptance harness: one PASS/FAIL line per criterion.

#include "cli_harness.hpp"
#include "fd.hpp"
#include "oracles.hpp"

#include "modbal/balance.hpp"
#include "modbal/distillation.hpp"
#include "modbal/metrics.hpp"
#include "modbal/pipeline.hpp"
#include "modbal/similarity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <regex>
#include <sstream>

using namespace modbal;
namespace fs = std::filesystem;

namespace {

// Tolerances, pinned.
constexpr double kGradTol = 1e-4;
constexpr int kGradFixtures = 20;
constexpr double kSnfTol = 1e-10;
constexpr double kRowSumTol = 1e-9;
constexpr double kEquivarianceTol = 1e-12;
constexpr double kMetricTol = 1e-12;
constexpr double kMiTol = 1e-9;
constexpr double kIndependentMi = 0.02;
constexpr double kScheduleTol = 1e-12;
constexpr double kBalanceSlack = 0.01;
constexpr int kSeeds = 10;
constexpr int kDistillWins = 8;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("modbal_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---- 1. gradients ---------------------------------------------------------

// Reduces a matrix-valued op to a scalar with fixed random weights.
fd::Fn projected(std::function<ad::Var(const ad::Var&)> op, const Matrix& weights) {
  return [op = std::move(op), weights](const ad::Var& x) { return ad::sum(ad::hadamard(op(x), ad::constant(weights))); };
}

Verdict gradients() {
  Verdict v;
  Rng rng(1001);
  std::map<std::string, double> worst;
  auto record = [&](const std::string& name, const fd::Fn& f, const Matrix& point) {
    worst[name] = std::max(worst[name], fd::relative_error(f, point));
  };
  for (int t = 0; t < kGradFixtures; ++t) {
    const int r = 3 + t % 4, c = 2 + t % 3;
    const Matrix x = fd::random(rng, r, c);
    const Matrix other = fd::random(rng, r, c);
    const Matrix right = fd::random(rng, c, 4);
    const Matrix w_rc = fd::random(rng, r, c), w_r4 = fd::random(rng, r, 4);
    record("matmul.left", projected([&](const ad::Var& a) { return ad::matmul(a, ad::constant(right)); }, w_r4), x);
    record("matmul.right", projected([&](const ad::Var& b) { return ad::matmul(ad::constant(x), b); }, w_r4), right);
    Matrix dense = fd::random(rng, r, r);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < r; ++j)
        if (rng.uniform(0, 1) < 0.4) dense(i, j) = 0.0;
    const auto sp = sparse_view(dense);
    record("spmm", projected([&](const ad::Var& a) { return ad::spmm(sp, a); }, w_rc), x);
    record("add", projected([&](const ad::Var& a) { return ad::add(a, ad::constant(other)); }, w_rc), x);
    record("sub", projected([&](const ad::Var& a) { return ad::sub(ad::constant(other), a); }, w_rc), x);
    record("hadamard", projected([&](const ad::Var& a) { return ad::hadamard(a, a); }, w_rc), x);
    record("scale", projected([&](const ad::Var& a) { return ad::scale(a, -1.7); }, w_rc), x);
    const Matrix kinked = fd::away_from_zero(rng, r, c);
    record("relu", projected([&](const ad::Var& a) { return ad::relu(a); }, w_rc), kinked);
    record("clamp_min", projected([&](const ad::Var& a) { return ad::clamp_min(a, 0.0); }, w_rc), kinked);
    record("row_softmax", projected([&](const ad::Var& a) { return ad::row_softmax(a); }, w_rc), x);
    record("row_log_softmax", projected([&](const ad::Var& a) { return ad::row_log_softmax(a); }, w_rc), x);
    record("sum", [](const ad::Var& a) { return ad::sum(ad::hadamard(a, a)); }, x);
    record("mean", [](const ad::Var& a) { return ad::mean(ad::hadamard(a, a)); }, x);
    const Rows rows{0, r - 1, 1};
    record("select_rows", projected([&](const ad::Var& a) { return ad::select_rows(a, rows); }, fd::random(rng, 3, c)),
           x);
    std::vector<int> cols(static_cast<std::size_t>(r));
    for (auto& k : cols) k = static_cast<int>(rng.next() % static_cast<std::uint64_t>(c));
    record("pick", projected([&](const ad::Var& a) { return ad::pick(a, cols); }, fd::random(rng, r, 1)), x);
    record("concat_cols",
           projected([&](const ad::Var& a) { return ad::concat_cols({a, ad::constant(other), a}); },
                     fd::random(rng, r, 3 * c)),
           x);
    record("append_ones", projected([&](const ad::Var& a) { return ad::append_ones(a); }, fd::random(rng, r, c + 1)),
           x);

    // Composite losses.
    const int classes = 3;
    Labels labels(static_cast<std::size_t>(r));
    for (auto& l : labels) l = static_cast<int>(rng.next() % classes);
    Rows all(static_cast<std::size_t>(r));
    std::iota(all.begin(), all.end(), 0);
    const Matrix logits = fd::random(rng, r, classes);
    const Matrix teacher = softmax_rows(fd::random(rng, r, classes));
    record("cross_entropy", [&](const ad::Var& a) { return cross_entropy(a, labels, all); }, logits);
    record("kl", [&](const ad::Var& a) { return kl_to_teacher(a, teacher, all, 1.0 + 0.1 * t); }, logits);
    const Matrix target = fd::random(rng, r, c);
    record("representation", [&](const ad::Var& a) { return representation_loss(a, target, all); }, x);
  }

  // Weighted multitask total through two small graph encoders.
  for (int t = 0; t < kGradFixtures; ++t) {
    const int n = 8;
    Labels labels(n);
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % 3;
    std::vector<GcnModel> encoders;
    std::vector<Matrix> xs;
    for (int m = 0; m < 2; ++m) {
      GcnModel g;
      Matrix a = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (rng.uniform(0, 1) < 0.4) a(i, j) = a(j, i) = rng.uniform(0.1, 1.0);
      g.normalized_adjacency = normalize_adjacency(a);
      g.layer_weights = {fd::random(rng, 4, 5, 0.5), fd::random(rng, 5, 3, 0.5)};
      g.representation_dim = 3;
      g.head_weights = fd::random(rng, 4, 3, 0.5);
      encoders.push_back(g);
      xs.push_back(fd::random(rng, n, 4));
    }
    Rng init(static_cast<std::uint64_t>(t));
    const auto model = make_joint_model({"a", "b"}, encoders, init);
    CoefficientState k;
    k.k = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    k.r = {1.0, 1.0};
    k.multimodal_weight = 1.0;
    const Rows rows{0, 1, 2, 4, 5, 7};
    for (int which = 0; which < 3; ++which) {
      auto f = [&](const ad::Var& p) {
        auto params = JointParams::from(model);
        if (which == 2)
          params.fusion_head = p;
        else
          params.encoders[static_cast<std::size_t>(which)].layers[0] = p;
        std::vector<std::shared_ptr<const SparseMatrix>> adj;
        std::vector<ad::Var> inputs;
        for (std::size_t m = 0; m < 2; ++m) {
          adj.push_back(sparse_view(model.encoders[m].normalized_adjacency));
          inputs.push_back(ad::constant(xs[m]));
        }
        return joint_loss(joint_forward(params, adj, inputs), labels, rows, k).total;
      };
      const Matrix point = which == 2 ? model.fusion_head : model.encoders[which].layer_weights[0];
      record("joint_total", f, point);
    }
  }

  double overall = 0.0;
  std::string worst_name;
  for (const auto& [name, e] : worst) {
    if (e > overall) {
      overall = e;
      worst_name = name;
    }
    v.require(e < kGradTol, name);
  }
  v.detail << worst.size() << " ops/losses x " << kGradFixtures << " fixtures, worst rel err " << overall << " ("
           << worst_name << ")";
  return v;
}

// ---- 2. SNF oracle ----------------------------------------------------------

SimilarityNetwork random_network(Rng& rng, int n) {
  SimilarityNetwork w;
  w.matrix = Matrix::Ones(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) w.matrix(i, j) = w.matrix(j, i) = rng.uniform(0.05, 1.0);
  return w;
}

Verdict snf_oracle() {
  Verdict v;
  Rng rng(2002);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_network(rng, 5), b = random_network(rng, 5);
    SnfParams p;
    p.k_neighbors = 3;
    p.iterations = 20;
    p.convergence_tol = 0.0;
    const auto fused = snf_fuse({a, b}, p);
    const auto want = oracle::snf({oracle::from(a.matrix), oracle::from(b.matrix)}, 3, 20);
    v.require(fused.iterations_run == 20, "iteration count");
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        worst = std::max(worst, std::abs(fused.network.matrix(i, j) - want[static_cast<std::size_t>(i)][j]));
  }
  v.require(worst < kSnfTol, "entry difference");
  v.detail << "10 pairs of 5x5 networks, 20 iterations, max diff " << worst;
  return v;
}

// ---- 3. stochasticity, symmetry, equivariance ----------------------------------

Matrix permute(const Matrix& m, const std::vector<int>& perm, bool both) {
  Matrix out = m;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (both)
      for (std::size_t j = 0; j < perm.size(); ++j)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(perm[i], perm[j]);
    else
      out.row(static_cast<Eigen::Index>(i)) = m.row(perm[i]);
  }
  return out;
}

Verdict structure() {
  Verdict v;
  Rng rng(3003);
  double row_err = 0.0, diag_err = 0.0, asym = 0.0, min_entry = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + trial;
    std::vector<SimilarityNetwork> nets;
    for (int m = 0; m < 3; ++m) {
      SnfParams p;
      p.k_neighbors = 3;
      nets.push_back(scaled_exponential_similarity({"x", fd::random(rng, n, 5), {}}, p));
      const auto pm = normalize_P(nets.back()).matrix;
      for (int i = 0; i < n; ++i) {
        row_err = std::max(row_err, std::abs(pm.row(i).sum() - 1.0));
        diag_err = std::max(diag_err, std::abs(pm(i, i) - 0.5));
      }
    }
    SnfParams p;
    p.k_neighbors = 3;
    const auto f = snf_fuse(nets, p).network.matrix;
    asym = std::max(asym, (f - f.transpose()).cwiseAbs().maxCoeff());
    min_entry = std::min(min_entry, f.minCoeff());
  }
  v.require(row_err <= kRowSumTol, "P row sums");
  v.require(diag_err <= kRowSumTol, "P diagonal");
  v.require(asym == 0.0, "fused symmetry");
  v.require(min_entry >= 0.0, "fused nonnegativity");

  GcnModel g;
  const int n = 15;
  g.normalized_adjacency = normalize_adjacency(threshold_adjacency(random_network(rng, n), 3.0).adjacency);
  g.layer_weights = {fd::random(rng, 6, 8), fd::random(rng, 8, 4)};
  g.representation_dim = 4;
  g.head_weights = fd::random(rng, 5, 3);
  const Matrix x = fd::random(rng, n, 6);
  const auto base = gcn_forward(g, x);
  double equiv = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    GcnModel p = g;
    p.normalized_adjacency = permute(g.normalized_adjacency, perm, true);
    const auto out = gcn_forward(p, permute(x, perm, false));
    equiv = std::max(equiv, (out.logits - permute(base.logits, perm, false)).cwiseAbs().maxCoeff());
    equiv = std::max(equiv, (out.representations - permute(base.representations, perm, false)).cwiseAbs().maxCoeff());
  }
  v.require(equiv <= kEquivarianceTol, "GCN equivariance");
  v.detail << "P row err " << row_err << ", diag err " << diag_err << ", fused asym " << asym << ", min "
           << min_entry << ", GCN perm err " << equiv;
  return v;
}

// ---- 4. metric oracles ---------------------------------------------------------

Labels random_labels(Rng& rng, int n, int classes) {
  Labels l(static_cast<std::size_t>(n));
  for (auto& x : l) x = static_cast<int>(rng.next() % static_cast<std::uint64_t>(classes));
  return l;
}

Verdict metric_oracles() {
  Verdict v;
  Rng rng(4004);
  double f1_err = 0.0, auc_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 5 + static_cast<int>(rng.next() % 60), classes = 2 + static_cast<int>(rng.next() % 4);
    Labels truth = random_labels(rng, n, classes);
    // AUC needs at least one class with both positives and negatives.
    while (std::count(truth.begin(), truth.end(), truth[0]) == n) truth = random_labels(rng, n, classes);
    const Labels pred = random_labels(rng, n, classes);
    f1_err = std::max(f1_err, std::abs(macro_f1(truth, pred, classes) - oracle::macro_f1(truth, pred, classes)));
    Matrix scores(n, classes);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < classes; ++c)
        scores(i, c) = trial % 2 ? rng.uniform(0.0, 1.0) : 1.0 + static_cast<double>(rng.next() % 4);
      scores.row(i) /= scores.row(i).sum();
    }
    auc_err = std::max(auc_err, std::abs(macro_ovr_auc(truth, scores).value -
                                         oracle::macro_auc(truth, oracle::from(scores), classes)));
  }
  Labels uniform;
  for (int i = 0; i < 100000; ++i) uniform.push_back(i % 4);
  const double mi_same = mutual_information(uniform, uniform);
  const double mi_indep = mutual_information(random_labels(rng, 100000, 4), random_labels(rng, 100000, 4));
  v.require(f1_err <= kMetricTol, "macro F1");
  v.require(auc_err <= kMetricTol, "macro AUC");
  v.require(std::abs(mi_same - std::log(4.0)) <= kMiTol, "MI ln 4");
  v.require(mi_indep < kIndependentMi, "independent MI");
  v.detail << "1000 fixtures: F1 err " << f1_err << ", AUC err " << auc_err << "; MI(X,X) - ln4 = "
           << mi_same - std::log(4.0) << "; MI(indep, 1e5) = " << mi_indep;
  return v;
}

// ---- 5. coefficient schedule ---------------------------------------------------

Verdict schedule() {
  Verdict v;
  Rng rng(5005);
  double worst = 0.0;
  auto compare = [&](const std::vector<double>& f, const BalanceConfig& cfg, int classes) {
    const auto r = compute_r(f);
    const auto want_r = oracle::schedule_r(f);
    const auto k = compute_k(r, f, cfg, classes).k;
    for (std::size_t m = 0; m < f.size(); ++m) {
      worst = std::max(worst, std::abs(r[m] - want_r[m]));
      worst = std::max(worst, std::abs(k[m] - oracle::schedule_k(want_r[m], f[m], cfg.alpha, cfg.beta, cfg.gamma,
                                                                  classes)));
    }
  };
  compare({0.8, 0.6, 0.3}, BalanceConfig{}, 4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> f(2 + rng.next() % 4);
    for (auto& x : f) x = rng.uniform(0.02, 1.0);
    BalanceConfig cfg;
    cfg.alpha = rng.uniform(0.01, 2.0);
    cfg.beta = rng.uniform(0.01, 2.0);
    cfg.gamma = rng.uniform(0.5, 2.5);
    compare(f, cfg, 2 + static_cast<int>(rng.next() % 6));
  }
  v.require(worst <= kScheduleTol, "oracle agreement");

  BalanceConfig cfg;
  bool above_dec = true, below_inc = true;
  double prev_above = 2.0, prev_below = -1.0;
  for (int i = 1; i <= 100; ++i) {
    const double r = 0.05 * i;
    const double above = compute_k({r}, {0.9}, cfg, 4).k[0];
    const double below = compute_k({r}, {0.1}, cfg, 4).k[0];
    above_dec = above_dec && above < prev_above;
    below_inc = below_inc && below > prev_below;
    prev_above = above;
    prev_below = below;
  }
  v.require(above_dec, "above-threshold branch decreasing");
  v.require(below_inc, "below-threshold branch increasing");
  v.detail << "501 fixtures, max diff " << worst << "; 100-point grid monotone: " << (above_dec && below_inc);
  return v;
}

// ---- 6 and 7. synthetic cohort experiments ------------------------------------

struct SeedOutcome {
  std::vector<double> mean_k;
  double distilled_val = 0.0, plain_val = 0.0;
  bool has_pair = false;
  double balanced = 0.0, naive = 0.0;
  double cnv_fused = 0.0, cnv_self = 0.0;
};

SeedOutcome run_seed(std::uint64_t seed, std::size_t& low) {
  RunConfig c;
  c.seed = seed;
  c.validate();
  const auto data = prepare(load_dataset(c), c, 0);
  low = data.modality_index("CNV");
  std::vector<UnimodalResult> fused;
  for (std::size_t m = 0; m < data.modality_count(); ++m) fused.push_back(run_unimodal(data, m, EdgeSource::fused, c));
  SeedOutcome o;
  o.cnv_fused = fused[low].test.macro_f1;
  o.cnv_self = run_unimodal(data, low, EdgeSource::self, c).test.macro_f1;

  const auto distill = run_distillation(data, fused, c, true);
  for (const auto& s : distill.students)
    if (s.category == ModalityCategory::weak && s.distilled && s.plain) {
      o.has_pair = true;
      o.distilled_val = s.student.best_val_macro_f1;
      o.plain_val = s.plain->best_val_macro_f1;
      break;
    }
  const auto init = initial_joint_model(data, fused, distill, c);
  const auto balanced = run_balanced(data, init, c, true);
  const auto naive = run_balanced(data, init, c, false);
  o.mean_k = mean_coefficients(balanced.report);
  o.balanced = balanced.report.test_metrics.back().macro_f1;
  o.naive = naive.report.test_metrics.back().macro_f1;
  return o;
}

std::pair<Verdict, Verdict> synthetic_cohort() {
  Verdict v6, v7;
  int low_smallest = 0, wins = 0, pairs = 0;
  double balanced = 0.0, naive = 0.0, fused = 0.0, self = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    std::size_t low = 0;
    const auto o = run_seed(static_cast<std::uint64_t>(s), low);
    const auto smallest = std::min_element(o.mean_k.begin(), o.mean_k.end()) - o.mean_k.begin();
    low_smallest += static_cast<std::size_t>(smallest) == low;
    if (o.has_pair) {
      ++pairs;
      wins += o.distilled_val > o.plain_val;
    }
    balanced += o.balanced / kSeeds;
    naive += o.naive / kSeeds;
    fused += o.cnv_fused / kSeeds;
    self += o.cnv_self / kSeeds;
    std::cerr << "  seed " << s << ": mean k";
    for (double k : o.mean_k) std::cerr << ' ' << k;
    std::cerr << " | distilled " << o.distilled_val << " vs plain " << o.plain_val << " | balanced " << o.balanced
              << " vs naive " << o.naive << " | CNV fused " << o.cnv_fused << " vs self " << o.cnv_self << "\n";
  }
  v6.require(low_smallest == kSeeds, "(a) low-information modality has the smallest mean k");
  v6.require(wins >= kDistillWins, "(b) distilled beats plain");
  v6.require(balanced >= naive - kBalanceSlack && balanced > naive, "(c) balanced vs naive");
  v6.detail << "(a) " << low_smallest << "/" << kSeeds << " seeds; (b) " << wins << "/" << pairs
            << " paired seeds; (c) balanced " << balanced << " vs naive " << naive;
  v7.require(fused >= self, "fused-edge mean below self-edge mean");
  v7.detail << "CNV test macro F1 over " << kSeeds << " seeds: fused edges " << fused << ", self edges " << self;
  return {std::move(v6), std::move(v7)};
}

// ---- 8. CLI determinism -----------------------------------------------------------

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = cli_harness::slurp(e.path());
  return out;
}

Verdict determinism() {
  Verdict v;
  const auto dir = scratch("determinism");
  std::ofstream(dir / "config.json") << cli_harness::small_config(11);
  const auto run_dir = dir / "run";
  const std::string common = " --config " + (dir / "config.json").string() + " --out " + run_dir.string();
  const std::vector<std::string> steps{"baseline", "fuse --plots", "train-unimodal", "train-unimodal --edges self",
                                       "distill", "train-balanced --plots",
                                       "evaluate --checkpoint " + (run_dir / "checkpoints/joint.ckpt").string()};
  auto pipeline = [&] {
    for (const auto& s : steps) {
      const auto r = cli_harness::run(s + common, dir / "log");
      if (r.code != 0) {
        v.require(false, s + " exited " + std::to_string(r.code));
        return;
      }
    }
    const auto r = cli_harness::run("generate --seed 3 --out " + (run_dir / "generated").string(), dir / "log");
    v.require(r.code == 0, "generate");
  };
  pipeline();
  fs::rename(run_dir, dir / "first");
  pipeline();
  const auto a = tree(dir / "first"), b = tree(run_dir);
  int differing = 0;
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != bytes) {
      ++differing;
      v.detail << " differs: " << name;
    }
  }
  v.require(a.size() == b.size() && differing == 0, "byte-identical outputs");
  v.detail << a.size() << " files compared across two runs, " << differing << " differ";
  fs::remove_all(dir);
  return v;
}

// ---- 9. baseline table on a cohort of the real shape --------------------------------

Verdict real_shape_baseline() {
  Verdict v;
  const auto dir = scratch("baseline");
  fs::path manifest;
  if (const char* env = std::getenv("MODBAL_BRCA_MANIFEST"); env && *env) {
    manifest = env;
    v.detail << "user manifest " << manifest.string() << "; ";
  } else {
    std::ofstream(dir / "spec.json") << dump_synthetic_spec(SyntheticSpec::brca_shaped());
    const auto g = cli_harness::run("generate --spec " + (dir / "spec.json").string() + " --out " +
                                        (dir / "cohort").string(),
                                    dir / "log");
    v.require(g.code == 0, "generate full-size cohort");
    manifest = dir / "cohort" / "manifest.json";
    v.detail << "generated cohort with 19580/19273/223 features; ";
  }
  std::ofstream(dir / "config.json") << R"({"dataset": {"source": "manifest", "manifest": ")" << manifest.string()
                                     << R"("}})";
  const auto r = cli_harness::run("baseline --config " + (dir / "config.json").string() + " --out " +
                                      (dir / "run").string(),
                                  dir / "log");
  v.require(r.code == 0, "baseline exit code");
  std::istringstream table(cli_harness::slurp(dir / "run" / "baseline.csv"));
  std::string line;
  std::getline(table, line);
  v.require(line == "modalities,accuracy,auc,macro_f1", "header");
  const std::regex cell(R"(\d\.\d{4} ± \d\.\d{4})");
  int rows = 0;
  while (std::getline(table, line)) {
    if (line.empty()) continue;
    ++rows;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    v.require(cells.size() == 4, "row width");
    for (std::size_t i = 1; i < cells.size(); ++i) v.require(std::regex_match(cells[i], cell), "cell " + cells[i]);
  }
  v.require(rows == 7, "7 modality combinations");
  v.detail << rows << " rows in mean ± std format";
  fs::remove_all(dir);
  return v;
}

}  // namespace

// Exit status is 0 once every criterion has been evaluated; FAIL lines are
// the verdict. --strict turns any FAIL into a nonzero exit.
int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  int failures = 0;
  auto report = [&](int id, const std::function<Verdict()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "threw: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !v.pass;
    std::printf("criterion %d: %s  %s (%.1f s)\n", id, v.pass ? "PASS" : "FAIL", v.detail.str().c_str(), secs);
    std::fflush(stdout);
  };
  report(1, gradients);
  report(2, snf_oracle);
  report(3, structure);
  report(4, metric_oracles);
  report(5, schedule);
  std::optional<Verdict> seven;
  report(6, [&] {
    auto [six, s7] = synthetic_cohort();
    seven.emplace();
    seven->pass = s7.pass;
    seven->detail << s7.detail.str();
    return std::move(six);
  });
  report(7, [&] {
    if (seven) return std::move(*seven);
    Verdict v;
    v.require(false, "cohort run did not complete");
    return v;
  });
  report(8, determinism);
  report(9, real_shape_baseline);
  std::printf("acceptance: %d/9 criteria PASS\n", 9 - failures);
  return strict && failures > 0 ? 1 : 0;
}
