#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "symrl/net.hpp"
#include "symrl/rng.hpp"
#include "symrl/symmetry.hpp"

namespace symrl {

// How each agent branch views the world:
//   transformed: branch j consumes T_j(o) and central outputs are mapped back
//                through the action element maps (symmetry-aware sharing);
//   one_hot:     branch j consumes [o, e_j] with no transforms.
// The trivial group with `transformed` collapses to a plain monolithic net.
struct BranchView {
  bool transformed = true;
  bool one_hot = false;
};

// Whole-robot action split into the central part and one share per agent.
struct JointAction {
  std::vector<double> central;
  std::vector<std::vector<double>> per_agent;
  std::vector<double> flat;
};

struct PolicyTape {
  std::vector<Tape> branches;
  std::vector<std::vector<double>> branch_out;
  std::vector<double> mean;
};

// Gaussian policy over a single shared network. Every agent branch runs the
// same parameters on its own view; symmetric shares are gathered into their
// slots and central outputs are averaged.
class SharedPolicy {
 public:
  SharedPolicy() = default;
  SharedPolicy(std::shared_ptr<const TransformSet> ts, BranchView view,
               const std::vector<int>& hidden, Activation act,
               std::uint64_t seed, double log_std_init);

  int obs_dim() const { return ts_->spec.obs_layout.total_width; }
  int act_dim() const { return ts_->spec.act_layout.total_width; }
  int group_size() const { return ts_->group_size(); }
  int branch_input_width() const;
  int branch_output_width() const;
  const TransformSet& transforms() const { return *ts_; }
  std::shared_ptr<const TransformSet> transforms_ptr() const { return ts_; }
  BranchView view() const { return view_; }

  std::vector<double> mean_action(std::span<const double> obs,
                                  PolicyTape* tape = nullptr) const;

  std::vector<double> sigma() const;

  struct SampleOut {
    std::vector<double> action;
    double log_prob = 0.0;
  };
  SampleOut sample(std::span<const double> obs, Rng& rng) const;

  double log_prob(std::span<const double> obs,
                  std::span<const double> act) const;
  double log_prob_from_mean(std::span<const double> mean,
                            std::span<const double> act) const;

  struct Grads {
    NetParams net;
    std::vector<double> log_std;
    void zero();
  };
  Grads zero_grads() const;

  void backward_mean(const PolicyTape& tape,
                     std::span<const double> mean_upstream, Grads& grads) const;
  // Accumulates coeff * d log_prob / d params. Returns the log-prob.
  double backward_log_prob(const PolicyTape& tape, std::span<const double> act,
                           double coeff, Grads& grads) const;

  double entropy() const;
  void add_entropy_grad(double coeff, Grads& grads) const;

  // Clips the gradient in place when grad_clip > 0, then steps and projects
  // log_std back into its legal range.
  void apply_adam(Grads& grads, AdamState& state, double lr, double grad_clip);

  JointAction split(std::span<const double> flat) const;
  std::vector<double> gather(const JointAction& ja) const;

  std::vector<std::span<double>> params();
  std::vector<std::span<const double>> params() const;

  NetParams net;
  std::vector<double> log_std;   // tied parameters
  std::vector<int> sigma_tie;    // flat act dim -> tied parameter index

 private:
  std::vector<double> branch_input(std::span<const double> obs, int j) const;

  std::shared_ptr<const TransformSet> ts_;
  BranchView view_;
};

}  // namespace symrl
