#include "symrl/policy.hpp"

#include <algorithm>
#include <cmath>

namespace symrl {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

SharedPolicy::SharedPolicy(std::shared_ptr<const TransformSet> ts,
                           BranchView view, const std::vector<int>& hidden,
                           Activation act, std::uint64_t seed,
                           double log_std_init)
    : ts_(std::move(ts)), view_(view) {
  NetArch arch;
  arch.layer_widths.push_back(branch_input_width());
  for (int h : hidden) arch.layer_widths.push_back(h);
  arch.activation = act;
  arch.output_width = branch_output_width();
  net = init_params(arch, seed);

  // Sigma tying: one parameter per central dim, except planar-rotate pairs
  // share one; one parameter per share dim, reused by every agent slot.
  const auto& lay = ts_->spec.act_layout;
  sigma_tie.assign(lay.total_width, -1);
  int next = 0;
  int off = 0;
  for (const auto& b : lay.blocks) {
    if (b.kind != BlockKind::AgentIndexed) {
      if (b.rule.type == RuleType::PlanarRotate) {
        for (auto [p, q] : b.rule.rotate_pairs) {
          sigma_tie[off + p] = next;
          sigma_tie[off + q] = next;
          ++next;
        }
      }
      for (int k = 0; k < b.width; ++k)
        if (sigma_tie[off + k] < 0) sigma_tie[off + k] = next++;
    }
    off += b.width;
  }
  const int n = group_size();
  const int share_w = static_cast<int>(ts_->act_slot_indices[0].size());
  for (int p = 0; p < share_w; ++p) {
    for (int j = 0; j < n; ++j) sigma_tie[ts_->act_slot_indices[j][p]] = next + p;
  }
  next += share_w;
  log_std.assign(next, log_std_init);
}

int SharedPolicy::branch_input_width() const {
  return obs_dim() + (view_.one_hot ? group_size() : 0);
}

int SharedPolicy::branch_output_width() const {
  const int central_w = static_cast<int>(ts_->act_central_indices.size());
  const int share_w = static_cast<int>(ts_->act_slot_indices[0].size());
  return central_w + share_w;
}

std::vector<double> SharedPolicy::branch_input(std::span<const double> obs,
                                               int j) const {
  std::vector<double> x;
  if (view_.transformed) {
    x = ts_->obs[j].apply(obs);
  } else {
    x.assign(obs.begin(), obs.end());
  }
  if (view_.one_hot) {
    const int n = group_size();
    for (int k = 0; k < n; ++k) x.push_back(k == j ? 1.0 : 0.0);
  }
  return x;
}

std::vector<double> SharedPolicy::mean_action(std::span<const double> obs,
                                              PolicyTape* tape) const {
  if (static_cast<int>(obs.size()) != obs_dim())
    throw DimensionError("policy: observation width " +
                         std::to_string(obs.size()) + ", layout expects " +
                         std::to_string(obs_dim()));
  const int n = group_size();
  const int central_w = static_cast<int>(ts_->act_central_indices.size());
  const int share_w = static_cast<int>(ts_->act_slot_indices[0].size());
  std::vector<double> flat(act_dim(), 0.0);
  std::vector<double> central_acc(central_w, 0.0);
  if (tape) {
    tape->branches.assign(n, Tape{});
    tape->branch_out.assign(n, {});
  }
  std::vector<double> out, fixed(central_w);
  for (int j = 0; j < n; ++j) {
    const auto x = branch_input(obs, j);
    forward(net, x, out, tape ? &tape->branches[j] : nullptr);
    for (int p = 0; p < share_w; ++p)
      flat[ts_->act_slot_indices[j][p]] = out[central_w + p];
    if (central_w > 0) {
      std::span<const double> c(out.data(), central_w);
      if (view_.transformed) {
        ts_->act_central[(n - 1 - j) % n].apply(c, fixed);
      } else {
        std::copy(c.begin(), c.end(), fixed.begin());
      }
      for (int m = 0; m < central_w; ++m) central_acc[m] += fixed[m];
    }
    if (tape) tape->branch_out[j] = out;
  }
  for (int m = 0; m < central_w; ++m)
    flat[ts_->act_central_indices[m]] = central_acc[m] / n;
  if (tape) tape->mean = flat;
  return flat;
}

std::vector<double> SharedPolicy::sigma() const {
  std::vector<double> s(act_dim());
  for (int d = 0; d < act_dim(); ++d) s[d] = std::exp(log_std[sigma_tie[d]]);
  return s;
}

SharedPolicy::SampleOut SharedPolicy::sample(std::span<const double> obs,
                                             Rng& rng) const {
  SampleOut out;
  const auto mean = mean_action(obs);
  const auto sig = sigma();
  out.action.resize(act_dim());
  for (int d = 0; d < act_dim(); ++d)
    out.action[d] = mean[d] + sig[d] * rng.normal();
  out.log_prob = log_prob_from_mean(mean, out.action);
  return out;
}

double SharedPolicy::log_prob_from_mean(std::span<const double> mean,
                                        std::span<const double> act) const {
  double lp = 0.0;
  for (int d = 0; d < act_dim(); ++d) {
    const double ls = log_std[sigma_tie[d]];
    const double z = (act[d] - mean[d]) * std::exp(-ls);
    lp += -0.5 * z * z - ls - 0.5 * kLog2Pi;
  }
  return lp;
}

double SharedPolicy::log_prob(std::span<const double> obs,
                              std::span<const double> act) const {
  const auto mean = mean_action(obs);
  return log_prob_from_mean(mean, act);
}

void SharedPolicy::Grads::zero() {
  net.zero();
  std::fill(log_std.begin(), log_std.end(), 0.0);
}

SharedPolicy::Grads SharedPolicy::zero_grads() const {
  Grads g;
  g.net = zeros_like(net);
  g.log_std.assign(log_std.size(), 0.0);
  return g;
}

void SharedPolicy::backward_mean(const PolicyTape& tape,
                                 std::span<const double> mean_upstream,
                                 Grads& grads) const {
  const int n = group_size();
  const int central_w = static_cast<int>(ts_->act_central_indices.size());
  const int share_w = static_cast<int>(ts_->act_slot_indices[0].size());
  std::vector<double> upc(central_w), upc_fixed(central_w);
  for (int m = 0; m < central_w; ++m)
    upc[m] = mean_upstream[ts_->act_central_indices[m]] / n;
  std::vector<double> up_net(branch_output_width());
  for (int j = 0; j < n; ++j) {
    if (central_w > 0) {
      if (view_.transformed) {
        ts_->act_central[(n - 1 - j) % n].apply_transpose(upc, upc_fixed);
      } else {
        std::copy(upc.begin(), upc.end(), upc_fixed.begin());
      }
      std::copy(upc_fixed.begin(), upc_fixed.end(), up_net.begin());
    }
    for (int p = 0; p < share_w; ++p)
      up_net[central_w + p] = mean_upstream[ts_->act_slot_indices[j][p]];
    backward(net, tape.branches[j], up_net, grads.net);
  }
}

double SharedPolicy::backward_log_prob(const PolicyTape& tape,
                                       std::span<const double> act,
                                       double coeff, Grads& grads) const {
  std::vector<double> mean_up(act_dim());
  double lp = 0.0;
  for (int d = 0; d < act_dim(); ++d) {
    const int k = sigma_tie[d];
    const double ls = log_std[k];
    const double inv_sig = std::exp(-ls);
    const double z = (act[d] - tape.mean[d]) * inv_sig;
    lp += -0.5 * z * z - ls - 0.5 * kLog2Pi;
    mean_up[d] = coeff * z * inv_sig;
    grads.log_std[k] += coeff * (z * z - 1.0);
  }
  backward_mean(tape, mean_up, grads);
  return lp;
}

double SharedPolicy::entropy() const {
  double h = 0.0;
  for (int d = 0; d < act_dim(); ++d)
    h += log_std[sigma_tie[d]] + 0.5 * (1.0 + kLog2Pi);
  return h;
}

void SharedPolicy::add_entropy_grad(double coeff, Grads& grads) const {
  for (int d = 0; d < act_dim(); ++d) grads.log_std[sigma_tie[d]] += coeff;
}

std::vector<std::span<double>> SharedPolicy::params() {
  auto v = param_views(net);
  v.emplace_back(log_std);
  return v;
}

std::vector<std::span<const double>> SharedPolicy::params() const {
  auto v = param_views(static_cast<const NetParams&>(net));
  v.emplace_back(log_std);
  return v;
}

void SharedPolicy::apply_adam(Grads& grads, AdamState& state, double lr,
                              double grad_clip) {
  auto gv = param_views(grads.net);
  gv.emplace_back(grads.log_std);
  if (grad_clip > 0.0) clip_grad_norm(gv, grad_clip);
  auto pv = params();
  std::vector<std::span<const double>> cgv(gv.begin(), gv.end());
  if (state.m.empty()) state = make_adam_state(cgv);
  adam_step(pv, cgv, state, lr);
  for (double& ls : log_std) ls = std::clamp(ls, kLogStdMin, kLogStdMax);
}

JointAction SharedPolicy::split(std::span<const double> flat) const {
  if (static_cast<int>(flat.size()) != act_dim())
    throw DimensionError("split: action width mismatch");
  JointAction ja;
  ja.flat.assign(flat.begin(), flat.end());
  for (int m : ts_->act_central_indices) ja.central.push_back(flat[m]);
  for (int j = 0; j < group_size(); ++j) {
    std::vector<double> share;
    for (int d : ts_->act_slot_indices[j]) share.push_back(flat[d]);
    ja.per_agent.push_back(std::move(share));
  }
  return ja;
}

std::vector<double> SharedPolicy::gather(const JointAction& ja) const {
  std::vector<double> flat(act_dim(), 0.0);
  for (size_t m = 0; m < ts_->act_central_indices.size(); ++m)
    flat[ts_->act_central_indices[m]] = ja.central[m];
  for (int j = 0; j < group_size(); ++j)
    for (size_t p = 0; p < ts_->act_slot_indices[j].size(); ++p)
      flat[ts_->act_slot_indices[j][p]] = ja.per_agent[j][p];
  return flat;
}

}  // namespace symrl
