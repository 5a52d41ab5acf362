#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcl/experiment.hpp"
#include "mcl/tensor.hpp"

int main(int argc, char** argv) {
  CLI::App app{"meta-continual-learning experiment runner"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_dir = "run";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> run_dirs;
  bool corrupt = false;

  auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
    if (needs_config)
      cmd->add_option("--config", config_path, "experiment config file")
          ->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "seed override");
  };

  auto* train = app.add_subcommand("train", "meta-train and write checkpoints");
  add_common(train);
  auto* test = app.add_subcommand("test", "meta-test a checkpoint and write the forgetting report");
  add_common(test);
  test->add_option("--checkpoint", checkpoint_path, "theta checkpoint")
      ->required();
  auto* baseline = app.add_subcommand("baseline", "sequential fine-tuning baseline");
  add_common(baseline);
  auto* gradcheck = app.add_subcommand("gradcheck", "run gradient oracle checks at reduced size");
  gradcheck->add_option("--config", config_path, "experiment config file")
      ->required();
  gradcheck->add_flag("--corrupt", corrupt, "test hook: corrupt one gradient")
      ->group(""); // hidden
  auto* gen = app.add_subcommand("gen-data", "write the synthetic stream as JSON-lines per task");
  add_common(gen);
  auto* report = app.add_subcommand("report", "cross-method comparison tables");
  report->add_option("--run", run_dirs, "run directories to compare")
      ->required();
  report->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return mcl::exp::cmd_train(config_path, out_dir, seed);
    if (test->parsed())
      return mcl::exp::cmd_test(config_path, checkpoint_path, out_dir, seed);
    if (baseline->parsed())
      return mcl::exp::cmd_baseline(config_path, out_dir, seed);
    if (gradcheck->parsed())
      return mcl::exp::cmd_gradcheck(config_path, corrupt);
    if (gen->parsed())
      return mcl::exp::cmd_gen_data(config_path, out_dir, seed);
    if (report->parsed()) return mcl::exp::cmd_report(run_dirs, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
