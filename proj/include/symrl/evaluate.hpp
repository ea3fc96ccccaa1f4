#pragma once

#include <functional>

#include "symrl/agent.hpp"

namespace symrl {

struct EvalResult {
  double success_rate = 0.0;
  double mean_return = 0.0;
  int episodes = 0;
};

using ActionFn =
    std::function<std::vector<double>(std::span<const double> raw_obs)>;

// Deterministic evaluation of an arbitrary controller.
EvalResult evaluate_controller(const ActionFn& act_fn, const EnvConfig& env_cfg,
                               int episodes, std::uint64_t seed);

// Deterministic-policy evaluation (mean action, no exploration noise).
EvalResult evaluate_policy(const Agent& agent, const EnvConfig& env_cfg,
                           int episodes, std::uint64_t seed);

}  // namespace symrl
