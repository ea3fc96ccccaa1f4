#include "symrl/rollout.hpp"

#include <cmath>

namespace symrl {

std::vector<ActorState> make_actors(const EnvConfig& cfg, int count,
                                    std::uint64_t seed) {
  std::vector<ActorState> actors;
  actors.reserve(count);
  for (int a = 0; a < count; ++a)
    actors.emplace_back(make_env(cfg), seed, static_cast<std::uint64_t>(a));
  return actors;
}

RolloutBatch collect_rollouts(const Agent& agent,
                              std::vector<ActorState>& actors, int horizon) {
  RolloutBatch b;
  b.actors = static_cast<int>(actors.size());
  b.horizon = horizon;
  b.obs_dim = actors.front().env->obs_dim();
  b.act_dim = actors.front().env->act_dim();
  const int n = b.size();
  b.obs.resize(static_cast<size_t>(n) * b.obs_dim);
  b.act.resize(static_cast<size_t>(n) * b.act_dim);
  b.log_prob.resize(n);
  b.reward.resize(n);
  b.value.resize(n);
  b.done.assign(n, 0);
  b.timeout.assign(n, 0);
  b.timeout_value.assign(n, 0.0);
  b.bootstrap_value.assign(b.actors, 0.0);

  std::vector<double> norm_obs(b.obs_dim);
  for (int t = 0; t < horizon; ++t) {
    for (int a = 0; a < b.actors; ++a) {
      ActorState& actor = actors[a];
      const int idx = t * b.actors + a;
      std::copy(actor.obs.begin(), actor.obs.end(),
                b.obs.begin() + static_cast<size_t>(idx) * b.obs_dim);
      agent.obs_norm.normalize(actor.obs, norm_obs);
      auto sample = agent.policy.sample(norm_obs, actor.sample_rng);
      b.log_prob[idx] = sample.log_prob;
      b.value[idx] = agent.val_norm.denormalize(agent.critic.value(norm_obs));
      std::copy(sample.action.begin(), sample.action.end(),
                b.act.begin() + static_cast<size_t>(idx) * b.act_dim);

      StepOut out = actor.env->step(sample.action);
      b.reward[idx] = out.reward;
      b.done[idx] = out.done ? 1 : 0;
      b.timeout[idx] = out.timeout ? 1 : 0;
      actor.ep_return += out.reward;
      if (out.done) {
        if (out.timeout) {
          agent.obs_norm.normalize(out.obs, norm_obs);
          b.timeout_value[idx] =
              agent.val_norm.denormalize(agent.critic.value(norm_obs));
        }
        b.finished_returns.push_back(actor.ep_return);
        b.finished_success.push_back(actor.env->success() ? 1 : 0);
        actor.ep_return = 0.0;
        actor.obs = actor.env->reset(actor.env_rng);
      } else {
        actor.obs = out.obs;
      }
    }
  }
  for (int a = 0; a < b.actors; ++a) {
    agent.obs_norm.normalize(actors[a].obs, norm_obs);
    b.bootstrap_value[a] =
        agent.val_norm.denormalize(agent.critic.value(norm_obs));
  }
  return b;
}

GaeOut compute_gae(const RolloutBatch& batch, double gamma, double tau,
                   std::span<const double> bootstrap_values,
                   bool value_bootstrap, bool normalize_advantage) {
  if (static_cast<int>(bootstrap_values.size()) != batch.actors)
    throw DimensionError("compute_gae: bootstrap value count mismatch");
  GaeOut out;
  const int n = batch.size();
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  for (int a = 0; a < batch.actors; ++a) {
    double adv = 0.0;
    for (int t = batch.horizon - 1; t >= 0; --t) {
      const int idx = t * batch.actors + a;
      const double nonterminal = batch.done[idx] ? 0.0 : 1.0;
      const double next_value = (t == batch.horizon - 1)
                                    ? bootstrap_values[a]
                                    : batch.value[(t + 1) * batch.actors + a];
      double r = batch.reward[idx];
      if (value_bootstrap && batch.timeout[idx])
        r += gamma * batch.timeout_value[idx];
      const double delta =
          r + gamma * nonterminal * next_value - batch.value[idx];
      adv = delta + gamma * tau * nonterminal * adv;
      out.advantages[idx] = adv;
      out.returns[idx] = adv + batch.value[idx];
    }
  }
  if (normalize_advantage && n > 1) {
    double mean = 0.0;
    for (double v : out.advantages) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : out.advantages) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / (std::sqrt(var) + 1e-8);
    for (double& v : out.advantages) v = (v - mean) * inv;
  }
  return out;
}

}  // namespace symrl
