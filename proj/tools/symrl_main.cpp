#include <CLI11.hpp>

#include "symrl/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"symrl: symmetry-aware continuous-control workbench"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, dataset, output, run_dir;
  std::string metric = "episodic_return_mean";
  std::string csv_out;
  int episodes = 100;
  std::uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "run a training config");
  train->add_option("--config", config_path, "run config JSON")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("checkpoint", checkpoint, "agent checkpoint")->required();
  eval->add_option("--episodes", episodes, "evaluation episodes");
  eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("--csv", csv_out, "append the eval row to this CSV");

  auto* mkds = app.add_subcommand("make-dataset", "generate a scripted dataset");
  mkds->add_option("--config", config_path, "dataset config JSON")->required();

  auto* aug = app.add_subcommand("augment", "add symmetric transition copies");
  aug->add_option("dataset", dataset, "input dataset")->required();
  aug->add_option("--output", output, "output dataset path")->required();

  auto* check = app.add_subcommand("check-symmetry", "verify symmetry properties");
  check->add_option("--config", config_path, "check config JSON")->required();

  auto* agg = app.add_subcommand("aggregate", "summarize seed curves");
  agg->add_option("run_dir", run_dir, "directory of seed CSVs")->required();
  agg->add_option("--metric", metric, "metric column to aggregate");
  agg->add_option("--output", output, "summary CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : symrl::kExitUsage;
  }

  if (train->parsed()) return symrl::cmd_train(config_path);
  if (eval->parsed()) return symrl::cmd_eval(checkpoint, episodes, seed, csv_out);
  if (mkds->parsed()) return symrl::cmd_make_dataset(config_path);
  if (aug->parsed()) return symrl::cmd_augment(dataset, output);
  if (check->parsed()) return symrl::cmd_check_symmetry(config_path);
  if (agg->parsed()) return symrl::cmd_aggregate(run_dir, metric, output);
  return symrl::kExitUsage;
}
