#include "symrl/critic.hpp"

#include <algorithm>

namespace symrl {

PooledCritic::PooledCritic(std::shared_ptr<const TransformSet> ts,
                           BranchView view, Mode mode,
                           const std::vector<int>& feature_hidden,
                           int feature_width,
                           const std::vector<int>& head_hidden, Activation act,
                           std::uint64_t seed)
    : ts_(std::move(ts)), view_(view), mode_(mode) {
  NetArch feat_arch;
  int in = obs_dim() + (mode_ == Mode::Q ? act_dim() : 0) +
           (view_.one_hot ? group_size() : 0);
  feat_arch.layer_widths.push_back(in);
  for (int h : feature_hidden) feat_arch.layer_widths.push_back(h);
  feat_arch.activation = act;
  feat_arch.output_width = feature_width;
  feature_net = init_params(feat_arch, derive_seed(seed, 0xF0));

  NetArch head_arch;
  head_arch.layer_widths.push_back(feature_width);
  for (int h : head_hidden) head_arch.layer_widths.push_back(h);
  head_arch.activation = act;
  head_arch.output_width = 1;
  head_net = init_params(head_arch, derive_seed(seed, 0xF1));
}

std::vector<double> PooledCritic::branch_input(std::span<const double> obs,
                                               std::span<const double> act,
                                               int j) const {
  std::vector<double> x;
  if (view_.transformed) {
    x = ts_->obs[j].apply(obs);
    if (mode_ == Mode::Q) {
      auto ta = ts_->act[j].apply(act);
      x.insert(x.end(), ta.begin(), ta.end());
    }
  } else {
    x.assign(obs.begin(), obs.end());
    if (mode_ == Mode::Q) x.insert(x.end(), act.begin(), act.end());
  }
  if (view_.one_hot) {
    for (int k = 0; k < group_size(); ++k) x.push_back(k == j ? 1.0 : 0.0);
  }
  return x;
}

double PooledCritic::eval(std::span<const double> obs,
                          std::span<const double> act, TapeSet* tape) const {
  const int n = group_size();
  if (tape) tape->branches.assign(n, Tape{});
  std::vector<double> pooled(feature_net.arch.output_width, 0.0);
  std::vector<double> feat;
  for (int j = 0; j < n; ++j) {
    const auto x = branch_input(obs, act, j);
    forward(feature_net, x, feat, tape ? &tape->branches[j] : nullptr);
    for (size_t k = 0; k < pooled.size(); ++k) pooled[k] += feat[k];
  }
  for (auto& v : pooled) v /= n;
  std::vector<double> out;
  forward(head_net, pooled, out, tape ? &tape->head : nullptr);
  if (tape) tape->pooled = pooled;
  return out[0];
}

double PooledCritic::value(std::span<const double> obs, TapeSet* tape) const {
  if (mode_ != Mode::V)
    throw DimensionError("value() called on a Q-mode critic");
  if (static_cast<int>(obs.size()) != obs_dim())
    throw DimensionError("critic: observation width mismatch");
  return eval(obs, {}, tape);
}

double PooledCritic::q_value(std::span<const double> obs,
                             std::span<const double> act,
                             TapeSet* tape) const {
  if (mode_ != Mode::Q)
    throw DimensionError("q_value() called on a V-mode critic");
  if (static_cast<int>(obs.size()) != obs_dim() ||
      static_cast<int>(act.size()) != act_dim())
    throw DimensionError("critic: observation/action width mismatch");
  return eval(obs, act, tape);
}

void PooledCritic::Grads::zero() {
  feature.zero();
  head.zero();
}

PooledCritic::Grads PooledCritic::zero_grads() const {
  Grads g;
  g.feature = zeros_like(feature_net);
  g.head = zeros_like(head_net);
  return g;
}

void PooledCritic::backward(const TapeSet& tape, double upstream,
                            Grads& grads) const {
  const int n = group_size();
  std::vector<double> up{upstream};
  std::vector<double> pooled_grad;
  symrl::backward(head_net, tape.head, up, grads.head, &pooled_grad);
  for (auto& v : pooled_grad) v /= n;
  for (int j = 0; j < n; ++j)
    symrl::backward(feature_net, tape.branches[j], pooled_grad, grads.feature);
}

std::vector<double> PooledCritic::merge(
    const std::vector<std::vector<double>>& features) {
  std::vector<double> out(features.front().size(), 0.0);
  for (const auto& f : features)
    for (size_t k = 0; k < out.size(); ++k) out[k] += f[k];
  for (auto& v : out) v /= static_cast<double>(features.size());
  return out;
}

std::vector<std::span<double>> PooledCritic::params() {
  auto v = param_views(feature_net);
  auto h = param_views(head_net);
  v.insert(v.end(), h.begin(), h.end());
  return v;
}

std::vector<std::span<const double>> PooledCritic::params() const {
  auto v = param_views(static_cast<const NetParams&>(feature_net));
  auto h = param_views(static_cast<const NetParams&>(head_net));
  v.insert(v.end(), h.begin(), h.end());
  return v;
}

void PooledCritic::apply_adam(Grads& grads, AdamState& state, double lr,
                              double grad_clip) {
  auto gv = param_views(grads.feature);
  auto gh = param_views(grads.head);
  gv.insert(gv.end(), gh.begin(), gh.end());
  if (grad_clip > 0.0) clip_grad_norm(gv, grad_clip);
  auto pv = params();
  std::vector<std::span<const double>> cgv(gv.begin(), gv.end());
  if (state.m.empty()) state = make_adam_state(cgv);
  adam_step(pv, cgv, state, lr);
}

void PooledCritic::soft_update_from(const PooledCritic& src, double rate) {
  auto dst = params();
  auto s = src.params();
  for (size_t k = 0; k < dst.size(); ++k)
    for (size_t i = 0; i < dst[k].size(); ++i)
      dst[k][i] = (1.0 - rate) * dst[k][i] + rate * s[k][i];
}

}  // namespace symrl
