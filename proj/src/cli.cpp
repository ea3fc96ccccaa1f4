#include "symrl/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "symrl/aggregate.hpp"
#include "symrl/offline.hpp"
#include "symrl/ppo.hpp"

namespace symrl {

namespace {

int usage_error(const std::exception& e) {
  std::cerr << "error: " << e.what() << "\n";
  return kExitUsage;
}

}  // namespace

int cmd_train(const std::string& config_path) {
  RunConfig rc;
  try {
    rc = load_run_config(config_path);
  } catch (const std::exception& e) {
    return usage_error(e);
  }
  int failures = 0;
  for (std::uint64_t seed : rc.seeds) {
    try {
      if (rc.algorithm == "ppo") {
        auto res = train_online(rc, seed);
        std::cout << rc.run_id << " seed " << seed
                  << ": eval_return " << res.final_return_mean
                  << " success " << res.final_success_rate << " -> "
                  << res.csv_path << "\n";
      } else if (rc.algorithm == "bc") {
        auto res = train_bc(rc, seed);
        std::cout << rc.run_id << " seed " << seed << ": success "
                  << res.final_success_rate << " -> " << res.csv_path << "\n";
      } else {
        auto res = train_iql(rc, seed);
        std::cout << rc.run_id << " seed " << seed << ": success "
                  << res.final_success_rate << " -> " << res.csv_path << "\n";
      }
    } catch (const std::exception& e) {
      std::cerr << rc.run_id << " seed " << seed << " failed: " << e.what()
                << "\n";
      failures += 1;
    }
  }
  return failures == 0 ? kExitOk : kExitViolation;
}

int cmd_eval(const std::string& checkpoint, int episodes, std::uint64_t seed,
             const std::string& csv_out) {
  try {
    EnvConfig env_cfg;
    std::string algorithm;
    Agent agent = load_agent(checkpoint, &env_cfg, &algorithm);
    const EvalResult ev = evaluate_policy(agent, env_cfg, episodes, seed);
    std::cout << "episodes " << ev.episodes << " success_rate "
              << format_metric(ev.success_rate) << " mean_return "
              << format_metric(ev.mean_return) << "\n";
    if (!csv_out.empty()) {
      MetricsWriter writer(csv_out, std::filesystem::path(checkpoint).stem().string(),
                           seed, variant_name(agent.variant), algorithm);
      MetricsRow row;
      row.phase = "eval";
      row.set("success_rate", ev.success_rate);
      row.set("mean_return", ev.mean_return);
      writer.write(row);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return usage_error(e);
  }
}

int cmd_make_dataset(const std::string& config_path) {
  try {
    std::ifstream is(config_path);
    if (!is) throw ConfigError("cannot open config file '" + config_path + "'");
    nlohmann::json j = nlohmann::json::parse(is);
    EnvConfig env_cfg;
    GeneratorKind kind = GeneratorKind::Expert;
    int episodes = 100;
    std::uint64_t seed = 1;
    std::string output;
    for (const auto& [key, v] : j.items()) {
      if (key.rfind("_note", 0) == 0) continue;
      else if (key == "env") env_cfg = EnvConfig::from_json(v);
      else if (key == "kind") kind = generator_from_name(v.get<std::string>());
      else if (key == "episodes") episodes = v.get<int>();
      else if (key == "seed") seed = v.get<std::uint64_t>();
      else if (key == "output") output = v.get<std::string>();
      else throw ConfigError("config: unknown key '" + key + "'");
    }
    if (output.empty()) throw ConfigError("config field 'output' is required");
    if (episodes < 1) throw ConfigError("config field 'episodes' must be >= 1");
    Dataset ds = generate_dataset(env_cfg, kind, episodes, seed);
    save_dataset(ds, output);
    std::cout << "wrote " << ds.transitions.size() << " transitions ("
              << episodes << " episodes, mean_success "
              << format_metric(ds.mean_success) << ") -> " << output << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return usage_error(e);
  }
}

int cmd_augment(const std::string& dataset_path, const std::string& output) {
  try {
    Dataset ds = load_dataset(dataset_path);
    Dataset aug = augment_symmetric(ds);
    save_dataset(aug, output);
    std::cout << "augmented " << ds.transitions.size() << " -> "
              << aug.transitions.size() << " transitions -> " << output << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return usage_error(e);
  }
}

namespace {

struct CheckLine {
  std::string name;
  double residual;
  double tolerance;
  bool pass;
};

void run_network_checks(const Agent& agent, Env& env, int samples,
                        std::uint64_t seed, std::vector<CheckLine>& lines) {
  const auto& ts = env.transforms();
  const int n = ts.group_size();
  Rng rng(derive_seed(seed, 0xCE), 9);
  double eq_res = 0.0, lp_res = 0.0, v_res = 0.0;
  std::vector<double> norm_obs(env.obs_dim()), norm_t(env.obs_dim());
  for (int s = 0; s < samples; ++s) {
    env.set_state(env.random_state(rng));
    const auto obs = env.observe();
    agent.obs_norm.normalize(obs, norm_obs);
    const auto mean = agent.policy.mean_action(norm_obs);
    const double v = agent.critic.value(norm_obs);
    // A probe action near the policy mean.
    std::vector<double> act(mean);
    for (auto& a : act) a += 0.3 * rng.normal();
    const double lp = agent.policy.log_prob_from_mean(mean, act);
    for (int i = 1; i < n; ++i) {
      const auto t_obs = ts.obs[i].apply(obs);
      agent.obs_norm.normalize(t_obs, norm_t);
      const auto mean_t = agent.policy.mean_action(norm_t);
      const auto t_mean = ts.act[i].apply(mean);
      for (int d = 0; d < env.act_dim(); ++d)
        eq_res = std::max(eq_res, std::abs(mean_t[d] - t_mean[d]));
      const auto t_act = ts.act[i].apply(act);
      lp_res = std::max(lp_res,
                        std::abs(agent.policy.log_prob_from_mean(mean_t, t_act) - lp));
      v_res = std::max(v_res, std::abs(agent.critic.value(norm_t) - v));
    }
  }
  lines.push_back({"policy_equivariance", eq_res, 1e-6, eq_res <= 1e-6});
  lines.push_back({"log_density_equivariance", lp_res, 1e-6, lp_res <= 1e-6});
  lines.push_back({"value_invariance", v_res, 1e-6, v_res <= 1e-6});
}

}  // namespace

int cmd_check_symmetry(const std::string& config_path) {
  EnvConfig env_cfg;
  int samples = 1000;
  std::uint64_t seed = 1;
  std::string checkpoint, report_path;
  try {
    std::ifstream is(config_path);
    if (!is) throw ConfigError("cannot open config file '" + config_path + "'");
    nlohmann::json j = nlohmann::json::parse(is);
    for (const auto& [key, v] : j.items()) {
      if (key.rfind("_note", 0) == 0) continue;
      else if (key == "env") env_cfg = EnvConfig::from_json(v);
      else if (key == "samples") samples = v.get<int>();
      else if (key == "seed") seed = v.get<std::uint64_t>();
      else if (key == "checkpoint") checkpoint = v.get<std::string>();
      else if (key == "report") report_path = v.get<std::string>();
      else throw ConfigError("config: unknown key '" + key + "'");
    }
    if (samples < 1) throw ConfigError("config field 'samples' must be >= 1");
  } catch (const std::exception& e) {
    return usage_error(e);
  }

  try {
    auto env = make_env(env_cfg);
    std::vector<CheckLine> lines;

    const AxiomReport ax = verify_group_axioms(env->transforms(), samples, seed);
    lines.push_back({"group_commutativity", ax.commutativity, 1e-12,
                     ax.commutativity <= 1e-12});
    lines.push_back({"group_distributivity", ax.distributivity, 1e-12,
                     ax.distributivity <= 1e-12});
    lines.push_back({"group_cyclicity", ax.cyclicity, 1e-12,
                     ax.cyclicity <= 1e-12});
    lines.push_back({"group_orthogonality", ax.orthogonality, 1e-12,
                     ax.orthogonality <= 1e-12});

    const CommutationReport mdp = check_mdp_symmetry(*env, samples, seed);
    lines.push_back({"mdp_obs_commutation", mdp.max_obs_residual, 1e-8,
                     mdp.max_obs_residual <= 1e-8});
    lines.push_back({"mdp_reward_equality", mdp.max_reward_diff, 1e-12,
                     mdp.max_reward_diff <= 1e-12});
    lines.push_back({"mdp_done_agreement",
                     static_cast<double>(mdp.done_mismatches), 0.0,
                     mdp.done_mismatches == 0});

    if (!checkpoint.empty()) {
      Agent agent = load_agent(checkpoint);
      run_network_checks(agent, *env, std::min(samples, 100), seed, lines);
    }

    bool all_pass = true;
    std::ostringstream report;
    for (const auto& l : lines) {
      report << l.name << " residual " << format_metric(l.residual)
             << " tolerance " << format_metric(l.tolerance) << " "
             << (l.pass ? "PASS" : "FAIL") << "\n";
      all_pass = all_pass && l.pass;
    }
    std::cout << report.str();
    if (!report_path.empty()) {
      std::ofstream os(report_path);
      if (!os) throw ConfigError("cannot write report '" + report_path + "'");
      os << report.str();
    }
    return all_pass ? kExitOk : kExitViolation;
  } catch (const std::exception& e) {
    return usage_error(e);
  }
}

int cmd_aggregate(const std::string& run_dir, const std::string& metric,
                  const std::string& output) {
  try {
    AggregateOptions opts;
    if (!metric.empty()) opts.metric = metric;
    const auto summary = aggregate_runs(run_dir, output, opts);
    std::cout << "aggregated " << summary.seed_files << " seed files -> "
              << summary.output_path << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return usage_error(e);
  }
}

}  // namespace symrl
