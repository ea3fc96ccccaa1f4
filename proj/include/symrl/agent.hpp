#pragma once

#include <memory>
#include <string>

#include "symrl/critic.hpp"
#include "symrl/env.hpp"
#include "symrl/normalizer.hpp"
#include "symrl/policy.hpp"

namespace symrl {

enum class Variant { SA, SASA, MA, MASA };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& s);

struct NetSpec {
  std::vector<int> hidden{128, 64};
  Activation activation = Activation::Elu;
  double log_std_init = 0.0;

  std::vector<int> critic_feature_hidden() const;
  int critic_feature_width() const;
  std::vector<int> critic_head_hidden() const;
};

// Policy + V critic + normalizers for one training run. SA and SASA run the
// shared machinery over the trivialized group; MA keeps the group structure
// but replaces transforms with one-hot ids. Observation statistics always
// pool over the environment's transform views.
struct Agent {
  Variant variant = Variant::MASA;
  NetSpec net_spec;
  SharedPolicy policy;
  PooledCritic critic;
  ObsNormalizer obs_norm;
  ScalarNormalizer val_norm;
  std::shared_ptr<const TransformSet> env_ts;   // environment group
  std::shared_ptr<const TransformSet> net_ts;   // group the networks run on
};

// The (spec, view) pair the given variant runs its networks on.
std::pair<std::shared_ptr<const TransformSet>, BranchView> variant_structure(
    Variant v, const SymmetrySpec& env_spec);

Agent make_agent(Variant v, const Env& env, const NetSpec& spec,
                 std::uint64_t seed);
Agent make_agent(Variant v, std::shared_ptr<const TransformSet> env_ts,
                 const NetSpec& spec, std::uint64_t seed);

// Checkpoint + JSON sidecar holding the symmetry spec and structure, so the
// agent reloads without its run configuration.
void save_agent(const Agent& agent, const EnvConfig& env_cfg,
                const std::string& algorithm, const std::string& path);
Agent load_agent(const std::string& path, EnvConfig* env_cfg_out = nullptr,
                 std::string* algorithm_out = nullptr);

}  // namespace symrl
