#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "symrl/rng.hpp"
#include "symrl/symmetry.hpp"

#include <json.hpp>

namespace symrl {

// Named reward terms with named weights; the combined reward is the exact
// weighted sum.
struct RewardTerms {
  std::vector<std::pair<std::string, double>> terms;
  std::vector<std::pair<std::string, double>> weights;

  void add(const std::string& name, double value) { terms.emplace_back(name, value); }
  void weight(const std::string& name, double w) { weights.emplace_back(name, w); }
};

double reward_combine(const RewardTerms& rt);

struct StepOut {
  std::vector<double> obs;
  double reward = 0.0;
  bool done = false;
  bool timeout = false;  // done by horizon, value-bootstrap applies
};

class Env {
 public:
  virtual ~Env() = default;

  virtual const SymmetrySpec& symmetry_spec() const = 0;
  virtual const TransformSet& transforms() const = 0;
  virtual std::shared_ptr<const TransformSet> transforms_ptr() const = 0;
  virtual int obs_dim() const = 0;
  virtual int act_dim() const = 0;
  virtual int horizon() const = 0;

  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual StepOut step(std::span<const double> action) = 0;
  // True when the finished episode counts as a success.
  virtual bool success() const = 0;

  // Full simulator state as a flat vector, for symmetry probes.
  virtual std::vector<double> state() const = 0;
  virtual void set_state(std::span<const double> s) = 0;
  virtual std::vector<double> symmetric_state(std::span<const double> s,
                                              int i) const = 0;
  virtual std::vector<double> random_state(Rng& rng) const = 0;
  virtual std::vector<double> observe() const = 0;
};

struct EnvConfig {
  std::string id;          // "rotreach" | "thrusterpole"
  int n_agents = 3;        // rotreach arm count, 2..6
  double link1 = 0.5;
  double link2 = 0.5;
  int horizon = 0;         // 0 = environment default
  // Publish the trivialized (|N| = 1) symmetry instead of the real one;
  // collapses every variant onto the monolithic degenerate case.
  bool trivial_symmetry = false;

  nlohmann::json to_json() const;
  static EnvConfig from_json(const nlohmann::json& j);
};

std::unique_ptr<Env> make_env(const EnvConfig& cfg);

// Publishes the declared symmetry of a known environment.
SymmetrySpec env_symmetry_spec(const EnvConfig& cfg);

struct CommutationReport {
  double max_obs_residual = 0.0;
  double max_reward_diff = 0.0;
  int done_mismatches = 0;
};

// step(T_i s, T_i a) versus T_i(step(s, a)) on random probes.
CommutationReport check_mdp_symmetry(Env& env, int probes,
                                     std::uint64_t seed);

}  // namespace symrl
