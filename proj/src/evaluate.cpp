#include "symrl/evaluate.hpp"

namespace symrl {

EvalResult evaluate_controller(const ActionFn& act_fn, const EnvConfig& env_cfg,
                               int episodes, std::uint64_t seed) {
  if (episodes < 1) throw ConfigError("evaluate: episodes must be >= 1");
  EvalResult res;
  res.episodes = episodes;
  auto env = make_env(env_cfg);
  double total_return = 0.0;
  int successes = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    Rng rng(derive_seed(seed, 0xEE, static_cast<std::uint64_t>(ep)), 4);
    auto obs = env->reset(rng);
    double ep_return = 0.0;
    while (true) {
      const auto action = act_fn(obs);
      StepOut out = env->step(action);
      ep_return += out.reward;
      if (out.done) break;
      obs = out.obs;
    }
    total_return += ep_return;
    if (env->success()) successes += 1;
  }
  res.mean_return = total_return / episodes;
  res.success_rate = static_cast<double>(successes) / episodes;
  return res;
}

EvalResult evaluate_policy(const Agent& agent, const EnvConfig& env_cfg,
                           int episodes, std::uint64_t seed) {
  std::vector<double> norm_obs(agent.policy.obs_dim());
  return evaluate_controller(
      [&](std::span<const double> obs) {
        agent.obs_norm.normalize(obs, norm_obs);
        return agent.policy.mean_action(norm_obs);
      },
      env_cfg, episodes, seed);
}

}  // namespace symrl
