#include "symrl/offline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace symrl {

ObsNormalizer dataset_obs_normalizer(
    const Dataset& ds, std::shared_ptr<const TransformSet> env_ts) {
  ObsNormalizer norm(std::move(env_ts));
  std::vector<std::vector<double>> all;
  all.reserve(ds.transitions.size());
  for (const auto& t : ds.transitions) all.push_back(t.obs);
  norm.update(all);
  return norm;
}

double bc_update(SharedPolicy& policy, const ObsNormalizer& obs_norm,
                 const Dataset& ds, std::span<const int> batch,
                 AdamState& adam, double learning_rate) {
  if (batch.empty()) throw TrainingError("bc_update: empty batch");
  auto grads = policy.zero_grads();
  PolicyTape tape;
  std::vector<double> o(ds.obs_dim());
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (int idx : batch) {
    const auto& t = ds.transitions[idx];
    obs_norm.normalize(t.obs, o);
    policy.mean_action(o, &tape);
    loss -= inv * policy.backward_log_prob(tape, t.act, -inv, grads);
  }
  if (!std::isfinite(loss)) throw TrainingError("bc_update: nan loss");
  policy.apply_adam(grads, adam, learning_rate, 0.0);
  return loss;
}

double bc_log_likelihood(const SharedPolicy& policy,
                         const ObsNormalizer& obs_norm, const Dataset& ds,
                         std::span<const int> indices) {
  if (indices.empty()) return 0.0;
  std::vector<double> o(ds.obs_dim());
  double ll = 0.0;
  for (int idx : indices) {
    const auto& t = ds.transitions[idx];
    obs_norm.normalize(t.obs, o);
    ll += policy.log_prob(o, t.act);
  }
  return ll / static_cast<double>(indices.size());
}

namespace {

struct SplitIndices {
  std::vector<int> train, val;
};

SplitIndices split_by_episode(const Dataset& ds, double val_fraction) {
  SplitIndices out;
  if (val_fraction <= 0.0) {
    out.train.resize(ds.transitions.size());
    for (size_t k = 0; k < ds.transitions.size(); ++k) out.train[k] = static_cast<int>(k);
    return out;
  }
  const long every = std::max(2L, std::lround(1.0 / val_fraction));
  for (size_t k = 0; k < ds.transitions.size(); ++k) {
    if (ds.transitions[k].episode_id % every == 0)
      out.val.push_back(static_cast<int>(k));
    else
      out.train.push_back(static_cast<int>(k));
  }
  if (out.train.empty()) throw ConfigError("validation split left no training data");
  return out;
}

std::pair<std::string, std::string> run_paths(const RunConfig& rc,
                                              std::uint64_t seed) {
  const std::string out_dir = resolve_output_dir(rc.output_dir);
  std::filesystem::create_directories(out_dir);
  const std::string stem = rc.run_id + "_seed" + std::to_string(seed);
  return {(std::filesystem::path(out_dir) / (stem + ".csv")).string(),
          (std::filesystem::path(out_dir) / (stem + ".ckpt")).string()};
}

}  // namespace

OfflineResult train_bc(const RunConfig& rc, std::uint64_t seed) {
  const Dataset ds = load_dataset(rc.dataset_path);
  auto env = make_env(rc.env);
  Agent agent = make_agent(rc.variant, *env, rc.net, derive_seed(seed, 0x10));
  agent.obs_norm = dataset_obs_normalizer(ds, agent.env_ts);

  const SplitIndices split = split_by_episode(ds, rc.bc.val_fraction);
  Rng rng(derive_seed(seed, 0x50), 7);
  AdamState adam;

  auto [csv_path, ckpt_path] = run_paths(rc, seed);
  MetricsWriter writer(csv_path, rc.run_id, seed, variant_name(rc.variant),
                       "bc");

  std::vector<int> batch(rc.bc.batch_size);
  for (int step = 1; step <= rc.bc.grad_steps; ++step) {
    for (auto& b : batch)
      b = split.train[rng.uniform_int(split.train.size())];
    const double loss =
        bc_update(agent.policy, agent.obs_norm, ds, batch, adam,
                  rc.bc.learning_rate);
    if (step % rc.bc.log_every == 0 || step == rc.bc.grad_steps) {
      MetricsRow row;
      row.phase = "train";
      row.grad_steps = step;
      row.set("bc_loss", loss);
      if (!split.val.empty()) {
        // Fixed validation prefix keeps the log cost bounded.
        const size_t cap = std::min<size_t>(split.val.size(), 2048);
        std::span<const int> val(split.val.data(), cap);
        row.set("policy_loss",
                -bc_log_likelihood(agent.policy, agent.obs_norm, ds, val));
      }
      writer.write(row);
    }
  }

  save_agent(agent, rc.env, "bc", ckpt_path);
  const EvalResult ev = evaluate_policy(agent, rc.env, rc.eval_episodes,
                                        derive_seed(seed, 0xE));
  MetricsRow row;
  row.phase = "eval";
  row.grad_steps = rc.bc.grad_steps;
  row.set("success_rate", ev.success_rate);
  row.set("mean_return", ev.mean_return);
  writer.write(row);

  return {ev.success_rate, ev.mean_return, csv_path, ckpt_path};
}

double expectile_loss(double expectile, double u) {
  const double w = (u < 0.0) ? std::abs(expectile - 1.0) : expectile;
  return w * u * u;
}

double awr_weight(const IqlConfig& cfg, double advantage) {
  return std::min(std::exp(cfg.awr_temperature * advantage),
                  cfg.adv_weight_clip);
}

IqlNets make_iql_nets(const Agent& agent, std::uint64_t seed) {
  IqlNets nets;
  const NetSpec& ns = agent.net_spec;
  const BranchView view = agent.policy.view();
  auto make_q = [&](std::uint64_t role) {
    return PooledCritic(agent.net_ts, view, PooledCritic::Mode::Q,
                        ns.critic_feature_hidden(), ns.critic_feature_width(),
                        ns.critic_head_hidden(), ns.activation,
                        derive_seed(seed, role));
  };
  nets.q1 = make_q(0xA1);
  nets.q2 = make_q(0xA2);
  nets.q1_target = nets.q1;
  nets.q2_target = nets.q2;
  return nets;
}

IqlLosses iql_update(Agent& agent, IqlNets& nets, const ObsNormalizer& obs_norm,
                     const Dataset& ds, std::span<const int> batch,
                     const IqlConfig& cfg, AdamState& q1_adam,
                     AdamState& q2_adam, AdamState& v_adam,
                     AdamState& policy_adam) {
  if (batch.empty()) throw TrainingError("iql_update: empty batch");
  IqlLosses losses;
  const double coeff = 1.0 / static_cast<double>(batch.size());

  auto q1_grads = nets.q1.zero_grads();
  auto q2_grads = nets.q2.zero_grads();
  auto v_grads = agent.critic.zero_grads();
  auto pol_grads = agent.policy.zero_grads();

  PooledCritic::TapeSet q_tape, v_tape;
  PolicyTape pol_tape;
  std::vector<double> o(ds.obs_dim()), no(ds.obs_dim());

  for (int idx : batch) {
    const auto& t = ds.transitions[idx];
    obs_norm.normalize(t.obs, o);
    obs_norm.normalize(t.next_obs, no);
    const double q_target = std::min(nets.q1_target.q_value(o, t.act),
                                     nets.q2_target.q_value(o, t.act));

    // Expectile regression of V toward the target Q.
    const double v = agent.critic.value(o, &v_tape);
    const double u = q_target - v;
    losses.v_loss += coeff * expectile_loss(cfg.expectile, u);
    const double w_exp =
        (u < 0.0) ? std::abs(cfg.expectile - 1.0) : cfg.expectile;
    agent.critic.backward(v_tape, coeff * w_exp * 2.0 * u * -1.0, v_grads);

    // Bellman regression of both Q heads.
    const double mask = (t.done && !t.timeout) ? 0.0 : 1.0;
    const double y = t.reward + cfg.gamma * mask * agent.critic.value(no);
    const double q1 = nets.q1.q_value(o, t.act, &q_tape);
    losses.q_loss += coeff * (q1 - y) * (q1 - y);
    nets.q1.backward(q_tape, coeff * 2.0 * (q1 - y), q1_grads);
    const double q2 = nets.q2.q_value(o, t.act, &q_tape);
    losses.q_loss += coeff * (q2 - y) * (q2 - y);
    nets.q2.backward(q_tape, coeff * 2.0 * (q2 - y), q2_grads);

    // Advantage-weighted likelihood for the policy.
    const double adv = q_target - v;
    const double w_awr = awr_weight(cfg, adv);
    agent.policy.mean_action(o, &pol_tape);
    const double lp = agent.policy.backward_log_prob(pol_tape, t.act,
                                                     -coeff * w_awr, pol_grads);
    losses.policy_loss -= coeff * w_awr * lp;
  }
  if (!std::isfinite(losses.q_loss) || !std::isfinite(losses.v_loss) ||
      !std::isfinite(losses.policy_loss))
    throw TrainingError("iql_update: nan loss");

  nets.q1.apply_adam(q1_grads, q1_adam, cfg.learning_rate, 0.0);
  nets.q2.apply_adam(q2_grads, q2_adam, cfg.learning_rate, 0.0);
  agent.critic.apply_adam(v_grads, v_adam, cfg.learning_rate, 0.0);
  agent.policy.apply_adam(pol_grads, policy_adam, cfg.learning_rate, 0.0);

  nets.q1_target.soft_update_from(nets.q1, cfg.target_update_rate);
  nets.q2_target.soft_update_from(nets.q2, cfg.target_update_rate);
  return losses;
}

OfflineResult train_iql(const RunConfig& rc, std::uint64_t seed) {
  const Dataset ds = load_dataset(rc.dataset_path);
  auto env = make_env(rc.env);
  Agent agent = make_agent(rc.variant, *env, rc.net, derive_seed(seed, 0x10));
  agent.obs_norm = dataset_obs_normalizer(ds, agent.env_ts);
  IqlNets nets = make_iql_nets(agent, derive_seed(seed, 0x11));

  Rng rng(derive_seed(seed, 0x51), 8);
  AdamState q1_adam, q2_adam, v_adam, pol_adam;

  auto [csv_path, ckpt_path] = run_paths(rc, seed);
  MetricsWriter writer(csv_path, rc.run_id, seed, variant_name(rc.variant),
                       "iql");

  std::vector<int> batch(rc.iql.batch_size);
  for (int step = 1; step <= rc.iql.grad_steps; ++step) {
    for (auto& b : batch)
      b = static_cast<int>(rng.uniform_int(ds.transitions.size()));
    const IqlLosses losses =
        iql_update(agent, nets, agent.obs_norm, ds, batch, rc.iql, q1_adam,
                   q2_adam, v_adam, pol_adam);
    if (step % rc.iql.log_every == 0 || step == rc.iql.grad_steps) {
      MetricsRow row;
      row.phase = "train";
      row.grad_steps = step;
      row.set("q_loss", losses.q_loss);
      row.set("v_loss", losses.v_loss);
      row.set("awr_loss", losses.policy_loss);
      writer.write(row);
    }
  }

  save_agent(agent, rc.env, "iql", ckpt_path);
  const EvalResult ev = evaluate_policy(agent, rc.env, rc.eval_episodes,
                                        derive_seed(seed, 0xE));
  MetricsRow row;
  row.phase = "eval";
  row.grad_steps = rc.iql.grad_steps;
  row.set("success_rate", ev.success_rate);
  row.set("mean_return", ev.mean_return);
  writer.write(row);

  return {ev.success_rate, ev.mean_return, csv_path, ckpt_path};
}

}  // namespace symrl
