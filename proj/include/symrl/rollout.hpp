#pragma once

#include <memory>
#include <vector>

#include "symrl/agent.hpp"
#include "symrl/env.hpp"

namespace symrl {

// Persistent per-actor simulation state; episodes continue across windows.
struct ActorState {
  std::unique_ptr<Env> env;
  std::vector<double> obs;
  Rng env_rng;
  Rng sample_rng;
  double ep_return = 0.0;

  ActorState(std::unique_ptr<Env> e, std::uint64_t seed, std::uint64_t index)
      : env(std::move(e)),
        env_rng(derive_seed(seed, 0x20, index), 1),
        sample_rng(derive_seed(seed, 0x30, index), 2) {
    obs = env->reset(env_rng);
  }
};

std::vector<ActorState> make_actors(const EnvConfig& cfg, int count,
                                    std::uint64_t seed);

// Time-major storage: index t * actors + a.
struct RolloutBatch {
  int actors = 0, horizon = 0, obs_dim = 0, act_dim = 0;
  std::vector<double> obs;            // raw observations
  std::vector<double> act;
  std::vector<double> log_prob;
  std::vector<double> reward;
  std::vector<double> value;          // denormalized value estimates
  std::vector<std::uint8_t> done;
  std::vector<std::uint8_t> timeout;
  std::vector<double> timeout_value;  // V(o') at truncation, else 0
  std::vector<double> bootstrap_value;  // per actor, V of the window-final obs

  // Episodes that finished inside this window.
  std::vector<double> finished_returns;
  std::vector<std::uint8_t> finished_success;

  int size() const { return actors * horizon; }
  std::span<const double> obs_row(int idx) const {
    return {obs.data() + static_cast<size_t>(idx) * obs_dim,
            static_cast<size_t>(obs_dim)};
  }
  std::span<const double> act_row(int idx) const {
    return {act.data() + static_cast<size_t>(idx) * act_dim,
            static_cast<size_t>(act_dim)};
  }
};

// Samples `horizon` steps from every actor with frozen normalizer statistics.
RolloutBatch collect_rollouts(const Agent& agent,
                              std::vector<ActorState>& actors, int horizon);

struct GaeOut {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Generalized advantage estimation over the batch. `bootstrap_values` holds
// one value per actor for the observation following the window. Truncated
// steps bootstrap through the stored timeout value when `value_bootstrap`.
GaeOut compute_gae(const RolloutBatch& batch, double gamma, double tau,
                   std::span<const double> bootstrap_values,
                   bool value_bootstrap, bool normalize_advantage);

}  // namespace symrl
