#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symrl/env.hpp"

namespace symrl {

struct Transition {
  std::vector<double> obs;
  std::vector<double> act;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;      // true termination (success / fall)
  bool timeout = false;   // episode cut at the horizon
  long episode_id = 0;
};

struct Dataset {
  SymmetrySpec spec;
  std::string generator;
  double mean_success = 0.0;  // realized per-episode success of the generator
  long episodes = 0;
  std::vector<Transition> transitions;

  int obs_dim() const { return spec.obs_layout.total_width; }
  int act_dim() const { return spec.act_layout.total_width; }
  void validate() const;
};

// Header line with spec and metadata, then one JSON record per transition
// with base64-encoded little-endian doubles.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

enum class GeneratorKind { Expert, Weak, Mixed, HalfExpert, WeakExpert, AsymExpert };

GeneratorKind generator_from_name(const std::string& s);
std::string generator_name(GeneratorKind k);

// Greedy inverse-kinematics velocity controller; steers the arm closest to
// the target (or always arm 0 in asymmetric mode) and holds the others.
std::vector<double> rotreach_expert_action(std::span<const double> obs,
                                           int n_arms, double link1,
                                           double link2, bool always_arm0);

Dataset generate_dataset(const EnvConfig& env_cfg, GeneratorKind kind,
                         int episodes, std::uint64_t seed);

// Adds (T_i(o), T_i(a), r, T_i(o')) for every non-identity i; episode ids of
// the copies are remapped to fresh ranges.
Dataset augment_symmetric(const Dataset& ds);

std::string base64_encode(const std::vector<double>& values);
std::vector<double> base64_decode(const std::string& text);

}  // namespace symrl
