#include "commands.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

void add_common(CLI::App* cmd, modbal::cli::CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Run config (JSON); defaults apply when omitted")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override the config seed");
  cmd->add_option("--out", o.out, "Run directory");
  cmd->add_flag("--force", o.force, "Overwrite existing outputs");
  cmd->add_flag("--plots", o.plots, "Also write PGM/PPM figures");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace modbal::cli;
  CLI::App app{"Multi-omics classification with fused similarity graphs, distillation and modality balancing"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string spec_path, modality, edges = "fused", checkpoint;

  auto* generate = app.add_subcommand("generate", "Write a synthetic cohort as CSV files plus a manifest");
  add_common(generate, common);
  generate->add_option("--spec", spec_path, "Synthetic spec (JSON)")->check(CLI::ExistingFile);

  auto* baseline = app.add_subcommand("baseline", "Logistic regression on every modality combination");
  add_common(baseline, common);

  auto* fuse = app.add_subcommand("fuse", "Build per-modality similarity networks and fuse them");
  add_common(fuse, common);

  auto* unimodal = app.add_subcommand("train-unimodal", "Train single-modality graph encoders");
  add_common(unimodal, common);
  unimodal->add_option("--modality", modality, "Modality name; all when omitted");
  unimodal->add_option("--edges", edges, "Edge source")->check(CLI::IsMember({"self", "fused"}));

  auto* distill = app.add_subcommand("distill", "Pretrain weaker encoders against the strongest one");
  add_common(distill, common);

  auto* balanced = app.add_subcommand("train-balanced", "Joint training with per-modality loss reweighting");
  add_common(balanced, common);

  auto* evaluate = app.add_subcommand("evaluate", "Recompute test metrics from a checkpoint");
  add_common(evaluate, common);
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (generate->parsed()) cmd_generate(common, spec_path);
    else if (baseline->parsed()) cmd_baseline(common);
    else if (fuse->parsed()) cmd_fuse(common);
    else if (unimodal->parsed()) cmd_train_unimodal(common, modality, edges);
    else if (distill->parsed()) cmd_distill(common);
    else if (balanced->parsed()) cmd_train_balanced(common);
    else if (evaluate->parsed()) cmd_evaluate(common, checkpoint);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const modbal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
