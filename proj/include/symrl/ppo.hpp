#pragma once

#include <deque>
#include <functional>

#include "symrl/metrics.hpp"
#include "symrl/rollout.hpp"
#include "symrl/run_config.hpp"

namespace symrl {

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double approx_kl = 0.0;        // last processed epoch
  double clip_frac = 0.0;
  double entropy = 0.0;
  double policy_sym_loss = 0.0;  // SASA only
  double value_sym_loss = 0.0;
  int epochs_used = 0;
  double max_first_ratio_dev = 0.0;  // max |ratio - 1| over the first minibatch
  double grad_norm = 0.0;
};

// One clipped-surrogate update over the batch. Gradients from policy and
// critic are clipped by their joint global norm. Throws TrainingError on
// non-finite losses.
PpoStats ppo_update(Agent& agent, const RolloutBatch& batch, const GaeOut& gae,
                    const PpoConfig& cfg, Rng& rng, AdamState& policy_state,
                    AdamState& critic_state);

// Auxiliary symmetry penalties for monolithic networks: the action-map
// mismatch ||T_i(A(o)) - A(T_i(o))||_2 and the value mismatch
// |V(o) - V(T_i(o))| for one non-identity transform index i.
std::pair<double, double> sasa_aux_losses(
    const std::function<std::vector<double>(std::span<const double>)>& action_fn,
    const std::function<double(std::span<const double>)>& value_fn,
    std::span<const double> obs, const TransformSet& ts, int i);

class OnlineTrainer {
 public:
  OnlineTrainer(const RunConfig& rc, std::uint64_t seed);

  // Collect + advantage estimation + update; returns the update statistics.
  PpoStats update_once();

  struct Result {
    long env_steps = 0;
    double final_return_mean = 0.0;   // deterministic evaluation
    double final_success_rate = 0.0;
    std::string csv_path, checkpoint_path;
  };
  Result run();

  Agent& agent() { return agent_; }
  long env_steps() const { return env_steps_; }
  const RunConfig& config() const { return rc_; }

 private:
  RunConfig rc_;
  std::uint64_t seed_;
  Agent agent_;
  std::vector<ActorState> actors_;
  Rng shuffle_rng_;
  AdamState policy_adam_, critic_adam_;
  long env_steps_ = 0;
  std::deque<double> recent_returns_;
  std::deque<std::uint8_t> recent_success_;
};

OnlineTrainer::Result train_online(const RunConfig& rc, std::uint64_t seed);

}  // namespace symrl
