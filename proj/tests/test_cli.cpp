#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "symrl/aggregate.hpp"
#include "symrl/cli.hpp"
#include "symrl/dataset.hpp"
#include "symrl/evaluate.hpp"
#include "symrl/metrics.hpp"
#include "symrl/run_config.hpp"

using namespace symrl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  static const fs::path dir =
      fs::temp_directory_path() / "symrl_cli_scratch";
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
  const auto path = scratch_dir() / name;
  std::ofstream os(path);
  os << content;
  return path.string();
}

std::string file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

nlohmann::json tiny_train_json(const std::string& variant,
                               const std::string& out_dir) {
  nlohmann::json j;
  j["run_id"] = "tiny_" + variant;
  j["env"] = {{"id", "rotreach"}, {"n_arms", 2}, {"link_lengths", {0.5, 0.5}}};
  j["variant"] = variant;
  j["algorithm"] = "ppo";
  j["seeds"] = {1};
  j["output_dir"] = out_dir;
  j["total_env_steps"] = 256;
  j["eval_episodes"] = 2;
  j["net"] = {{"hidden", {12, 8}}};
  j["ppo"] = {{"num_actors", 4}, {"horizon_length", 16},
              {"minibatch_size", 32}, {"mini_epochs", 2}};
  return j;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  auto j = tiny_train_json("MASA", (scratch_dir() / "v").string());
  SUBCASE("gamma out of range") {
    j["ppo"]["gamma"] = 1.5;
    CHECK_THROWS_WITH_AS((void)RunConfig::from_json(j),
                         doctest::Contains("gamma"), ConfigError);
  }
  SUBCASE("unknown keys are rejected") {
    j["warp_factor"] = 9;
    CHECK_THROWS_WITH_AS((void)RunConfig::from_json(j),
                         doctest::Contains("warp_factor"), ConfigError);
  }
  SUBCASE("unknown nested keys are rejected") {
    j["ppo"]["clip_vloss"] = true;
    CHECK_THROWS_WITH_AS((void)RunConfig::from_json(j),
                         doctest::Contains("clip_vloss"), ConfigError);
  }
  SUBCASE("note keys are ignored") {
    j["_note"] = "anything";
    j["ppo"]["_note_sched"] = "left out on purpose";
    CHECK_NOTHROW((void)RunConfig::from_json(j));
  }
  SUBCASE("offline runs require a dataset") {
    j["algorithm"] = "bc";
    CHECK_THROWS_WITH_AS((void)RunConfig::from_json(j),
                         doctest::Contains("dataset"), ConfigError);
  }
}

TEST_CASE("config round trip is stable") {
  auto j = tiny_train_json("SASA", "runs/x");
  j["ppo"]["sym_loss_weights"] = {{"policy", 0.7}, {"value", 0.3}};
  const RunConfig a = RunConfig::from_json(j);
  const RunConfig b = RunConfig::from_json(a.to_json());
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("quantiles use linear interpolation") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  CHECK(quantile_sorted(v, 0.5) == 3.0);
  CHECK(quantile_sorted(v, 0.25) == 2.0);
  CHECK(quantile_sorted(v, 0.75) == 4.0);
  const std::vector<double> w{1, 2};
  CHECK(quantile_sorted(w, 0.5) == 1.5);
  CHECK(quantile_sorted(w, 0.25) == 1.25);
}

TEST_CASE("train command produces deterministic artifacts") {
  const auto out1 = (scratch_dir() / "det1").string();
  const auto out2 = (scratch_dir() / "det2").string();
  fs::remove_all(out1);
  fs::remove_all(out2);
  auto j = tiny_train_json("MASA", out1);
  const auto cfg1 = write_file("det1.json", j.dump());
  j["output_dir"] = out2;
  const auto cfg2 = write_file("det2.json", j.dump());

  CHECK(cmd_train(cfg1) == kExitOk);
  CHECK(cmd_train(cfg2) == kExitOk);
  const auto csv1 = out1 + "/tiny_MASA_seed1.csv";
  const auto csv2 = out2 + "/tiny_MASA_seed1.csv";
  REQUIRE(fs::exists(csv1));
  REQUIRE(fs::exists(csv2));
  CHECK(file_bytes(csv1) == file_bytes(csv2));
  CHECK(fs::exists(out1 + "/tiny_MASA_seed1.ckpt"));
  CHECK(fs::exists(out1 + "/tiny_MASA_seed1.ckpt.spec.json"));
}

TEST_CASE("train command rejects a broken config with exit code 2") {
  auto j = tiny_train_json("MASA", (scratch_dir() / "bad").string());
  j["ppo"]["gamma"] = -1.0;
  const auto cfg = write_file("bad.json", j.dump());
  CHECK(cmd_train(cfg) == kExitUsage);
  CHECK(cmd_train("/definitely/not/here.json") == kExitUsage);
}

TEST_CASE("eval command reads a trained checkpoint") {
  const auto out = (scratch_dir() / "evald").string();
  fs::remove_all(out);
  const auto cfg = write_file("evald.json",
                              tiny_train_json("MASA", out).dump());
  REQUIRE(cmd_train(cfg) == kExitOk);
  const auto csv = (scratch_dir() / "eval_row.csv").string();
  CHECK(cmd_eval(out + "/tiny_MASA_seed1.ckpt", 3, 1, csv) == kExitOk);
  CHECK(fs::exists(csv));
  CHECK(cmd_eval(out + "/missing.ckpt", 3, 1, "") == kExitUsage);
}

TEST_CASE("make-dataset metadata matches a fresh generator evaluation") {
  const auto ds_path = (scratch_dir() / "expert.jsonl").string();
  nlohmann::json j;
  j["env"] = {{"id", "rotreach"}, {"n_arms", 3}};
  j["kind"] = "expert";
  j["episodes"] = 40;
  j["seed"] = 5;
  j["output"] = ds_path;
  const auto cfg = write_file("mkds.json", j.dump());
  REQUIRE(cmd_make_dataset(cfg) == kExitOk);
  const auto ds = load_dataset(ds_path);
  CHECK(ds.transitions.size() > 100);

  EnvConfig env_cfg;
  env_cfg.id = "rotreach";
  env_cfg.n_agents = 3;
  const auto fresh = evaluate_controller(
      [&](std::span<const double> obs) {
        return rotreach_expert_action(obs, 3, 0.5, 0.5, false);
      },
      env_cfg, 40, 99);
  CHECK(std::abs(ds.mean_success - fresh.success_rate) <= 0.05);
}

TEST_CASE("augment command multiplies the record count by the group order") {
  const auto in_path = (scratch_dir() / "aug_in.jsonl").string();
  const auto out_path = (scratch_dir() / "aug_out.jsonl").string();
  SymmetrySpec spec;
  spec.group = GroupKind::Reflection;
  spec.group_size = 2;
  Block pose{"pose", 1, BlockKind::CentralVariant, {}};
  pose.rule.type = RuleType::SignFlip;
  pose.rule.flip_mask = {true};
  spec.obs_layout.blocks.push_back(pose);
  spec.obs_layout.blocks.push_back({"l", 1, BlockKind::AgentIndexed, {}});
  spec.obs_layout.blocks.push_back({"r", 1, BlockKind::AgentIndexed, {}});
  spec.obs_layout.total_width = 3;
  spec.act_layout.blocks.push_back({"ul", 1, BlockKind::AgentIndexed, {}});
  spec.act_layout.blocks.push_back({"ur", 1, BlockKind::AgentIndexed, {}});
  spec.act_layout.total_width = 2;
  spec.validate();
  Dataset ds;
  ds.spec = spec;
  ds.generator = "synthetic";
  ds.episodes = 1;
  for (int k = 0; k < 7; ++k) {
    Transition t;
    t.obs = {0.1 * k, 1.0, 2.0};
    t.act = {0.5, -0.5};
    t.next_obs = {0.1 * k + 0.05, 1.0, 2.0};
    t.reward = -0.1;
    t.done = (k == 6);
    t.episode_id = 0;
    ds.transitions.push_back(std::move(t));
  }
  save_dataset(ds, in_path);
  REQUIRE(cmd_augment(in_path, out_path) == kExitOk);
  const auto aug = load_dataset(out_path);
  CHECK(aug.transitions.size() == 14);
  CHECK(cmd_augment("/nope.jsonl", out_path) == kExitUsage);
}

TEST_CASE("check-symmetry command") {
  SUBCASE("environment-only mode passes") {
    nlohmann::json j;
    j["env"] = {{"id", "thrusterpole"}};
    j["samples"] = 100;
    j["seed"] = 3;
    j["report"] = (scratch_dir() / "report_env.txt").string();
    const auto cfg = write_file("check_env.json", j.dump());
    CHECK(cmd_check_symmetry(cfg) == kExitOk);
    const auto report = file_bytes(j["report"].get<std::string>());
    CHECK(report.find("group_commutativity") != std::string::npos);
    CHECK(report.find("FAIL") == std::string::npos);
  }
  SUBCASE("equivariant checkpoint passes, monolithic checkpoint fails") {
    const auto out = (scratch_dir() / "checknets").string();
    fs::remove_all(out);
    for (const char* variant : {"MASA", "SA"}) {
      const auto cfg = write_file(std::string("train_") + variant + ".json",
                                  tiny_train_json(variant, out).dump());
      REQUIRE(cmd_train(cfg) == kExitOk);
    }
    nlohmann::json j;
    j["env"] = {{"id", "rotreach"}, {"n_arms", 2}, {"link_lengths", {0.5, 0.5}}};
    j["samples"] = 50;
    j["seed"] = 3;
    j["checkpoint"] = out + "/tiny_MASA_seed1.ckpt";
    CHECK(cmd_check_symmetry(write_file("check_masa.json", j.dump())) ==
          kExitOk);
    j["checkpoint"] = out + "/tiny_SA_seed1.ckpt";
    CHECK(cmd_check_symmetry(write_file("check_sa.json", j.dump())) ==
          kExitViolation);
  }
}

TEST_CASE("aggregate command summarizes seed curves") {
  const auto dir = (scratch_dir() / "agg").string();
  fs::remove_all(dir);
  fs::create_directories(dir);
  // Five seeds logging returns {1..5} at the same step buckets.
  for (int seed = 1; seed <= 5; ++seed) {
    MetricsWriter w(dir + "/run_seed" + std::to_string(seed) + ".csv", "run",
                    seed, "MASA", "ppo");
    for (long step : {100L, 200L}) {
      MetricsRow row;
      row.phase = "train";
      row.env_steps = step;
      row.set("episodic_return_mean", static_cast<double>(seed));
      w.write(row);
    }
  }
  const auto summary_path = dir + "/summary.csv";
  const auto summary =
      aggregate_runs(dir, summary_path, AggregateOptions{});
  CHECK(summary.seed_files == 5);
  CHECK(!summary.truncated);
  const auto text = file_bytes(summary_path);
  CHECK(text.find("MASA,100,3,2,4,5") != std::string::npos);
  CHECK(text.find("MASA,200,3,2,4,5") != std::string::npos);

  SUBCASE("identical curves collapse the band") {
    const auto dir2 = (scratch_dir() / "agg_same").string();
    fs::remove_all(dir2);
    fs::create_directories(dir2);
    for (int seed = 1; seed <= 5; ++seed) {
      MetricsWriter w(dir2 + "/run_seed" + std::to_string(seed) + ".csv",
                      "run", seed, "SA", "ppo");
      MetricsRow row;
      row.phase = "train";
      row.env_steps = 50;
      row.set("episodic_return_mean", 7.25);
      w.write(row);
    }
    aggregate_runs(dir2, dir2 + "/summary.csv", AggregateOptions{});
    CHECK(file_bytes(dir2 + "/summary.csv").find("SA,50,7.25,7.25,7.25,5") !=
          std::string::npos);
  }
  SUBCASE("mixed lengths are truncated with a warning") {
    MetricsWriter w(dir + "/run_seed6.csv", "run", 6, "MASA", "ppo");
    for (long step : {100L, 200L, 300L}) {
      MetricsRow row;
      row.phase = "train";
      row.env_steps = step;
      row.set("episodic_return_mean", 9.0);
      w.write(row);
    }
    const auto s2 = aggregate_runs(dir, dir + "/summary2.csv",
                                   AggregateOptions{});
    CHECK(s2.truncated);
    CHECK(file_bytes(dir + "/summary2.csv").find(",300,") == std::string::npos);
  }
  SUBCASE("empty directory is an error") {
    const auto dir3 = (scratch_dir() / "agg_empty").string();
    fs::create_directories(dir3);
    CHECK_THROWS_AS(
        (void)aggregate_runs(dir3, dir3 + "/s.csv", AggregateOptions{}),
        ConfigError);
  }
}

TEST_CASE("metrics writer enforces its schema") {
  const auto path = (scratch_dir() / "schema.csv").string();
  MetricsWriter w(path, "r", 1, "SA", "ppo");
  MetricsRow row;
  row.phase = "train";
  row.env_steps = 10;
  row.set("episodic_return_mean", 1.0);
  w.write(row);
  row.env_steps = 5;  // must not go backwards
  CHECK_THROWS_AS(w.write(row), ConfigError);
  std::ifstream is(path);
  std::string first;
  std::getline(is, first);
  CHECK(first == MetricsWriter::schema_line());
}

TEST_CASE("output root override applies to relative paths") {
  setenv("SYMRL_OUTPUT_ROOT", "/tmp/symrl_root", 1);
  CHECK(resolve_output_dir("runs/a") == "/tmp/symrl_root/runs/a");
  CHECK(resolve_output_dir("/abs/path") == "/abs/path");
  unsetenv("SYMRL_OUTPUT_ROOT");
  CHECK(resolve_output_dir("runs/a") == "runs/a");
}
