#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "symrl/net.hpp"
#include "symrl/policy.hpp"
#include "symrl/symmetry.hpp"

namespace symrl {

// Critic with shared per-agent feature layers pooled by an arithmetic mean
// before the value head. In Q mode each branch consumes the transformed
// observation concatenated with the transformed action.
class PooledCritic {
 public:
  enum class Mode { V, Q };

  PooledCritic() = default;
  PooledCritic(std::shared_ptr<const TransformSet> ts, BranchView view,
               Mode mode, const std::vector<int>& feature_hidden,
               int feature_width, const std::vector<int>& head_hidden,
               Activation act, std::uint64_t seed);

  int obs_dim() const { return ts_->spec.obs_layout.total_width; }
  int act_dim() const { return ts_->spec.act_layout.total_width; }
  int group_size() const { return ts_->group_size(); }
  Mode mode() const { return mode_; }
  BranchView view() const { return view_; }
  const TransformSet& transforms() const { return *ts_; }

  struct TapeSet {
    std::vector<Tape> branches;
    Tape head;
    std::vector<double> pooled;
  };

  double value(std::span<const double> obs, TapeSet* tape = nullptr) const;
  double q_value(std::span<const double> obs, std::span<const double> act,
                 TapeSet* tape = nullptr) const;

  struct Grads {
    NetParams feature, head;
    void zero();
  };
  Grads zero_grads() const;

  void backward(const TapeSet& tape, double upstream, Grads& grads) const;

  void apply_adam(Grads& grads, AdamState& state, double lr, double grad_clip);

  // Soft update toward `src` (same shapes): p = (1 - rate) * p + rate * src.
  void soft_update_from(const PooledCritic& src, double rate);

  static std::vector<double> merge(
      const std::vector<std::vector<double>>& features);

  std::vector<std::span<double>> params();
  std::vector<std::span<const double>> params() const;

  NetParams feature_net;  // shared per-branch layers
  NetParams head_net;     // value head on the pooled feature

 private:
  std::vector<double> branch_input(std::span<const double> obs,
                                   std::span<const double> act, int j) const;
  double eval(std::span<const double> obs, std::span<const double> act,
              TapeSet* tape) const;

  std::shared_ptr<const TransformSet> ts_;
  BranchView view_;
  Mode mode_ = Mode::V;
};

}  // namespace symrl
