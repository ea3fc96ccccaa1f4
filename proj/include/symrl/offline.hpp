#pragma once

#include "symrl/dataset.hpp"
#include "symrl/evaluate.hpp"
#include "symrl/ppo.hpp"

namespace symrl {

// Pooled observation statistics of a fixed dataset (frozen during training).
ObsNormalizer dataset_obs_normalizer(const Dataset& ds,
                                     std::shared_ptr<const TransformSet> env_ts);

// One likelihood-maximization step on the sampled batch; returns the loss
// (negative mean log-probability). Throws on an empty batch or NaN.
double bc_update(SharedPolicy& policy, const ObsNormalizer& obs_norm,
                 const Dataset& ds, std::span<const int> batch,
                 AdamState& adam, double learning_rate);

// Mean log-probability of the dataset actions over the given indices.
double bc_log_likelihood(const SharedPolicy& policy,
                         const ObsNormalizer& obs_norm, const Dataset& ds,
                         std::span<const int> indices);

struct OfflineResult {
  double final_success_rate = 0.0;
  double final_mean_return = 0.0;
  std::string csv_path, checkpoint_path;
};

OfflineResult train_bc(const RunConfig& rc, std::uint64_t seed);

double expectile_loss(double expectile, double u);

// exp(beta * advantage) clamped at the configured maximum.
double awr_weight(const IqlConfig& cfg, double advantage);

struct IqlNets {
  PooledCritic q1, q2, q1_target, q2_target;
};

IqlNets make_iql_nets(const Agent& agent, std::uint64_t seed);

struct IqlLosses {
  double q_loss = 0.0;
  double v_loss = 0.0;
  double policy_loss = 0.0;
};

// One step of expectile value regression, Bellman Q regression and
// advantage-weighted likelihood policy extraction, then a soft target update.
IqlLosses iql_update(Agent& agent, IqlNets& nets, const ObsNormalizer& obs_norm,
                     const Dataset& ds, std::span<const int> batch,
                     const IqlConfig& cfg, AdamState& q1_adam,
                     AdamState& q2_adam, AdamState& v_adam,
                     AdamState& policy_adam);

OfflineResult train_iql(const RunConfig& rc, std::uint64_t seed);

}  // namespace symrl
