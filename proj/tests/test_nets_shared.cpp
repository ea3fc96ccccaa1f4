#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "symrl/critic.hpp"
#include "symrl/policy.hpp"
#include "symrl/rng.hpp"

using namespace symrl;

namespace {

SymmetrySpec cyclic_arm_spec(int n) {
  SymmetrySpec spec;
  spec.group = GroupKind::Cyclic;
  spec.group_size = n;
  for (int k = 0; k < n; ++k)
    spec.obs_layout.blocks.push_back(
        {"arm" + std::to_string(k), 3, BlockKind::AgentIndexed, {}});
  Block target{"target", 2, BlockKind::CentralVariant, {}};
  target.rule.type = RuleType::PlanarRotate;
  target.rule.rotate_pairs = {{0, 1}};
  spec.obs_layout.blocks.push_back(target);
  spec.obs_layout.total_width = 3 * n + 2;
  Block c{"central_cmd", 2, BlockKind::CentralVariant, {}};
  c.rule.type = RuleType::PlanarRotate;
  c.rule.rotate_pairs = {{0, 1}};
  spec.act_layout.blocks.push_back(c);
  for (int k = 0; k < n; ++k)
    spec.act_layout.blocks.push_back(
        {"u" + std::to_string(k), 2, BlockKind::AgentIndexed, {}});
  spec.act_layout.total_width = 2 + 2 * n;
  spec.validate();
  return spec;
}

SymmetrySpec mirror_spec() {
  SymmetrySpec spec;
  spec.group = GroupKind::Reflection;
  spec.group_size = 2;
  Block pose{"pose", 3, BlockKind::CentralVariant, {}};
  pose.rule.type = RuleType::SignFlip;
  pose.rule.flip_mask = {true, false, true};
  spec.obs_layout.blocks.push_back(pose);
  spec.obs_layout.blocks.push_back({"left", 2, BlockKind::AgentIndexed, {}});
  spec.obs_layout.blocks.push_back({"right", 2, BlockKind::AgentIndexed, {}});
  spec.obs_layout.total_width = 7;
  Block central{"central", 2, BlockKind::CentralVariant, {}};
  central.rule.type = RuleType::SignFlip;
  central.rule.flip_mask = {false, true};
  spec.act_layout.blocks.push_back(central);
  spec.act_layout.blocks.push_back({"u_left", 1, BlockKind::AgentIndexed, {}});
  spec.act_layout.blocks.push_back({"u_right", 1, BlockKind::AgentIndexed, {}});
  spec.act_layout.total_width = 4;
  spec.validate();
  return spec;
}

std::shared_ptr<const TransformSet> make_set(const SymmetrySpec& spec) {
  return std::make_shared<TransformSet>(build_transform_set(spec));
}

SharedPolicy make_policy(const std::shared_ptr<const TransformSet>& ts,
                         std::uint64_t seed, double log_std_init = 0.0) {
  return SharedPolicy(ts, BranchView{true, false}, {10, 8}, Activation::Elu,
                      seed, log_std_init);
}

std::vector<double> random_obs(int w, Rng& rng) {
  std::vector<double> o(w);
  for (auto& x : o) x = rng.uniform(-1.5, 1.5);
  return o;
}

std::vector<double*> policy_param_pointers(SharedPolicy& p) {
  std::vector<double*> ptrs;
  for (auto& l : p.net.layers) {
    for (auto& w : l.w) ptrs.push_back(&w);
    for (auto& b : l.b) ptrs.push_back(&b);
  }
  for (auto& ls : p.log_std) ptrs.push_back(&ls);
  return ptrs;
}

std::vector<double> policy_grad_flat(const SharedPolicy::Grads& g) {
  std::vector<double> out;
  for (const auto& l : g.net.layers) {
    out.insert(out.end(), l.w.begin(), l.w.end());
    out.insert(out.end(), l.b.begin(), l.b.end());
  }
  out.insert(out.end(), g.log_std.begin(), g.log_std.end());
  return out;
}

}  // namespace

TEST_CASE("policy mean satisfies both equivariance clauses") {
  std::vector<SymmetrySpec> specs = {cyclic_arm_spec(2), cyclic_arm_spec(3),
                                     cyclic_arm_spec(4), mirror_spec()};
  for (const auto& spec : specs) {
    const auto ts = make_set(spec);
    const int n = spec.group_size;
    double worst_flat = 0.0, worst_share = 0.0, worst_central = 0.0;
    for (std::uint64_t draw = 0; draw < 10; ++draw) {
      const auto policy = make_policy(ts, derive_seed(77, draw));
      Rng rng(derive_seed(88, draw), 0);
      for (int s = 0; s < 5; ++s) {
        const auto o = random_obs(spec.obs_layout.total_width, rng);
        const auto mean = policy.mean_action(o);
        std::vector<std::vector<double>> mean_t(n);
        for (int i = 0; i < n; ++i)
          mean_t[i] = policy.mean_action(ts->obs[i].apply(o));
        for (int i = 0; i < n; ++i) {
          // whole-action form: A(T_i o) == T_i(A(o))
          const auto t_mean = ts->act[i].apply(mean);
          worst_flat =
              std::max(worst_flat, oracle::max_abs_diff(mean_t[i], t_mean));
          // per-share form: share_j(A(T_i o)) == share_i(A(T_j o))
          const auto ji = policy.split(mean_t[i]);
          for (int j = 0; j < n; ++j) {
            const auto jj = policy.split(mean_t[j]);
            worst_share = std::max(
                worst_share,
                oracle::max_abs_diff(ji.per_agent[j], jj.per_agent[i]));
          }
          // central form: central(A(T_i o)) == element-map_i(central(A(o)))
          const auto base = policy.split(mean);
          const auto central_t = ts->act_central[i].apply(base.central);
          worst_central = std::max(
              worst_central, oracle::max_abs_diff(ji.central, central_t));
        }
      }
    }
    CHECK(worst_flat <= 1e-6);
    CHECK(worst_share <= 1e-6);
    CHECK(worst_central <= 1e-6);
  }
}

TEST_CASE("constant central head symmetrizes to the flip-even part") {
  const auto spec = mirror_spec();
  const auto ts = make_set(spec);
  auto policy = make_policy(ts, 5);
  // Zero the output layer and set the central bias to (1, 2).
  auto& out_layer = policy.net.layers.back();
  std::fill(out_layer.w.begin(), out_layer.w.end(), 0.0);
  std::fill(out_layer.b.begin(), out_layer.b.end(), 0.0);
  out_layer.b[0] = 1.0;
  out_layer.b[1] = 2.0;
  Rng rng(3, 0);
  const auto o = random_obs(spec.obs_layout.total_width, rng);
  const auto ja = policy.split(policy.mean_action(o));
  CHECK(ja.central[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ja.central[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sampling collapses to the mean in the small-sigma limit") {
  const auto ts = make_set(cyclic_arm_spec(3));
  const auto policy = make_policy(ts, 9, -20.0);
  Rng rng(4, 0);
  const auto o = random_obs(policy.obs_dim(), rng);
  const auto mean = policy.mean_action(o);
  Rng sample_rng(10, 1);
  const auto s = policy.sample(o, sample_rng);
  CHECK(oracle::max_abs_diff(s.action, mean) <= 1e-7);
}

TEST_CASE("same rng state gives identical samples") {
  const auto ts = make_set(cyclic_arm_spec(3));
  const auto policy = make_policy(ts, 9);
  Rng rng(4, 0);
  const auto o = random_obs(policy.obs_dim(), rng);
  Rng r1(42, 1), r2(42, 1);
  const auto s1 = policy.sample(o, r1);
  const auto s2 = policy.sample(o, r2);
  CHECK(s1.action == s2.action);
  CHECK(s1.log_prob == s2.log_prob);
}

TEST_CASE("log-prob of the mean is the pure normalization term") {
  const auto ts = make_set(mirror_spec());
  const auto policy = make_policy(ts, 21, -0.5);
  Rng rng(6, 0);
  const auto o = random_obs(policy.obs_dim(), rng);
  const auto mean = policy.mean_action(o);
  double expect = 0.0;
  const auto sig = policy.sigma();
  for (double s : sig)
    expect += -std::log(s) - 0.5 * std::log(2.0 * 3.14159265358979323846);
  CHECK(policy.log_prob(o, mean) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("sampled log-prob matches an independent recomputation") {
  const auto ts = make_set(cyclic_arm_spec(3));
  const auto policy = make_policy(ts, 13, -0.3);
  Rng rng(8, 0);
  const auto o = random_obs(policy.obs_dim(), rng);
  Rng srng(77, 1);
  const auto s = policy.sample(o, srng);
  GaussianHead head{policy.mean_action(o), {}};
  head.log_std.resize(policy.act_dim());
  for (int d = 0; d < policy.act_dim(); ++d)
    head.log_std[d] = policy.log_std[policy.sigma_tie[d]];
  CHECK(s.log_prob ==
        doctest::Approx(gaussian_logprob(head, s.action)).epsilon(1e-12));
}

TEST_CASE("action density is equivariant") {
  for (const auto& spec : {cyclic_arm_spec(3), mirror_spec()}) {
    const auto ts = make_set(spec);
    const int n = spec.group_size;
    double worst = 0.0;
    for (std::uint64_t draw = 0; draw < 5; ++draw) {
      const auto policy = make_policy(ts, derive_seed(31, draw), -0.2);
      Rng rng(derive_seed(32, draw), 0);
      for (int s = 0; s < 5; ++s) {
        const auto o = random_obs(policy.obs_dim(), rng);
        std::vector<double> a(policy.act_dim());
        for (auto& x : a) x = rng.uniform(-1.0, 1.0);
        const double lp = policy.log_prob(o, a);
        for (int i = 1; i < n; ++i) {
          const double lp_t =
              policy.log_prob(ts->obs[i].apply(o), ts->act[i].apply(a));
          worst = std::max(worst, std::abs(lp_t - lp));
        }
      }
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("sigma is shared across agent slots and tied inside rotation pairs") {
  const auto ts = make_set(cyclic_arm_spec(3));
  auto policy = make_policy(ts, 3);
  for (size_t k = 0; k < policy.log_std.size(); ++k)
    policy.log_std[k] = -0.1 * static_cast<double>(k + 1);
  const auto sig = policy.sigma();
  // central rotation pair shares one value
  CHECK(sig[0] == sig[1]);
  // every agent slot sees the same share sigmas
  for (int j = 1; j < 3; ++j) {
    CHECK(sig[2 + 2 * j] == sig[2]);
    CHECK(sig[3 + 2 * j] == sig[3]);
  }
}

TEST_CASE("joint action split and gather round trip") {
  const auto ts = make_set(cyclic_arm_spec(4));
  const auto policy = make_policy(ts, 17);
  Rng rng(12, 0);
  std::vector<double> flat(policy.act_dim());
  for (auto& x : flat) x = rng.uniform(-2.0, 2.0);
  const auto ja = policy.split(flat);
  CHECK(ja.central.size() == 2);
  CHECK(ja.per_agent.size() == 4);
  CHECK(policy.gather(ja) == flat);
  CHECK(ja.flat == flat);
}

TEST_CASE("policy gradients match finite differences") {
  const auto ts = make_set(cyclic_arm_spec(3));
  auto policy = make_policy(ts, 23, -0.4);
  Rng rng(14, 0);
  const auto o = random_obs(policy.obs_dim(), rng);
  std::vector<double> act(policy.act_dim()), up(policy.act_dim());
  for (auto& x : act) x = rng.uniform(-1.0, 1.0);
  for (auto& x : up) x = rng.uniform(-1.0, 1.0);
  const double w_lp = 0.7;

  PolicyTape tape;
  policy.mean_action(o, &tape);
  auto grads = policy.zero_grads();
  policy.backward_mean(tape, up, grads);
  policy.backward_log_prob(tape, act, w_lp, grads);
  const auto analytic = policy_grad_flat(grads);

  auto f = [&]() {
    const auto mean = policy.mean_action(o);
    double loss = 0.0;
    for (int d = 0; d < policy.act_dim(); ++d) loss += up[d] * mean[d];
    return loss + w_lp * policy.log_prob_from_mean(mean, act);
  };
  const auto numeric = oracle::finite_diff(f, policy_param_pointers(policy));
  REQUIRE(numeric.size() == analytic.size());
  for (size_t k = 0; k < numeric.size(); ++k) {
    const double rel = std::abs(analytic[k] - numeric[k]) /
                       std::max(1e-4, std::abs(numeric[k]));
    CHECK(rel <= 1e-4);
  }
}

TEST_CASE("zero upstream gives zero policy gradients") {
  const auto ts = make_set(cyclic_arm_spec(3));
  auto policy = make_policy(ts, 29);
  Rng rng(15, 0);
  const auto o = random_obs(policy.obs_dim(), rng);
  PolicyTape tape;
  policy.mean_action(o, &tape);
  auto grads = policy.zero_grads();
  policy.backward_mean(tape, std::vector<double>(policy.act_dim(), 0.0), grads);
  for (double g : policy_grad_flat(grads)) CHECK(g == 0.0);
}

TEST_CASE("trivial group policy equals a plain network") {
  const auto spec = cyclic_arm_spec(3);
  const auto triv = make_set(trivialize(spec));
  const auto policy = SharedPolicy(triv, BranchView{true, false}, {10, 8},
                                   Activation::Elu, 51, 0.0);
  Rng rng(16, 0);
  const auto o = random_obs(policy.obs_dim(), rng);
  const auto direct = forward(policy.net, o);
  const auto mean = policy.mean_action(o);
  CHECK(oracle::max_abs_diff(mean, direct) == 0.0);
}

TEST_CASE("log_std projection keeps sigma in range through updates") {
  const auto ts = make_set(cyclic_arm_spec(2));
  auto policy = make_policy(ts, 4, 1.9);
  auto grads = policy.zero_grads();
  AdamState adam;
  for (int it = 0; it < 50; ++it) {
    grads.zero();
    for (auto& g : grads.log_std) g = -100.0;  // push sigma upward hard
    policy.apply_adam(grads, adam, 0.5, 0.0);
  }
  for (double ls : policy.log_std) CHECK(ls <= kLogStdMax);
  for (int it = 0; it < 200; ++it) {
    grads.zero();
    for (auto& g : grads.log_std) g = 100.0;
    policy.apply_adam(grads, adam, 0.5, 0.0);
  }
  for (double ls : policy.log_std) CHECK(ls >= kLogStdMin);
}

TEST_CASE("shared-policy head is 1/N of the monolithic symmetric head") {
  const auto spec = cyclic_arm_spec(3);
  const int n = spec.group_size;
  const int share_w = spec.act_layout.agent_share_width(n);
  const int central_w = spec.act_layout.central_width();
  const int hidden_last = 8;
  // A monolithic head emits central + N shares; the shared head emits one.
  const long mono_sym_params =
      static_cast<long>(hidden_last) * (n * share_w) + n * share_w;
  const long shared_sym_params =
      static_cast<long>(hidden_last) * share_w + share_w;
  CHECK(mono_sym_params == n * shared_sym_params);

  const auto ts = make_set(spec);
  const auto policy = make_policy(ts, 1);
  const auto& head = policy.net.layers.back();
  CHECK(head.out == central_w + share_w);
}

// ---------------------------------------------------------------------------
// Pooled critic
// ---------------------------------------------------------------------------

namespace {

PooledCritic make_critic(const std::shared_ptr<const TransformSet>& ts,
                         PooledCritic::Mode mode, std::uint64_t seed) {
  return PooledCritic(ts, BranchView{true, false}, mode, {10}, 8, {8},
                      Activation::Elu, seed);
}

}  // namespace

TEST_CASE("merge is the arithmetic mean of the per-agent features") {
  std::vector<std::vector<double>> feats = {{1.0, 2.0}, {3.0, 4.0}, {5.0, 9.0}};
  CHECK(PooledCritic::merge(feats) == std::vector<double>{3.0, 5.0});
}

TEST_CASE("constant feature net gives a constant value") {
  const auto ts = make_set(cyclic_arm_spec(3));
  auto critic = make_critic(ts, PooledCritic::Mode::V, 31);
  auto& out_layer = critic.feature_net.layers.back();
  std::fill(out_layer.w.begin(), out_layer.w.end(), 0.0);
  for (size_t k = 0; k < out_layer.b.size(); ++k)
    out_layer.b[k] = 0.1 * static_cast<double>(k + 1);
  Rng rng(18, 0);
  const auto o1 = random_obs(critic.obs_dim(), rng);
  const auto o2 = random_obs(critic.obs_dim(), rng);
  const double v1 = critic.value(o1);
  CHECK(v1 == critic.value(o2));
  CHECK(v1 == doctest::Approx(forward(critic.head_net, out_layer.b)[0])
                  .epsilon(1e-14));
}

TEST_CASE("value and q are invariant under the group") {
  for (const auto& spec : {cyclic_arm_spec(3), mirror_spec()}) {
    const auto ts = make_set(spec);
    const int n = spec.group_size;
    double worst_v = 0.0, worst_q = 0.0;
    for (std::uint64_t draw = 0; draw < 5; ++draw) {
      const auto vnet =
          make_critic(ts, PooledCritic::Mode::V, derive_seed(41, draw));
      const auto qnet =
          make_critic(ts, PooledCritic::Mode::Q, derive_seed(42, draw));
      Rng rng(derive_seed(43, draw), 0);
      for (int s = 0; s < 5; ++s) {
        const auto o = random_obs(vnet.obs_dim(), rng);
        std::vector<double> a(vnet.act_dim());
        for (auto& x : a) x = rng.uniform(-1.0, 1.0);
        const double v = vnet.value(o);
        const double q = qnet.q_value(o, a);
        for (int i = 1; i < n; ++i) {
          const auto to = ts->obs[i].apply(o);
          worst_v = std::max(worst_v, std::abs(vnet.value(to) - v));
          worst_q = std::max(
              worst_q, std::abs(qnet.q_value(to, ts->act[i].apply(a)) - q));
        }
      }
    }
    CHECK(worst_v <= 1e-6);
    CHECK(worst_q <= 1e-6);
  }
}

TEST_CASE("mode misuse throws") {
  const auto ts = make_set(mirror_spec());
  const auto v = make_critic(ts, PooledCritic::Mode::V, 1);
  const auto q = make_critic(ts, PooledCritic::Mode::Q, 2);
  std::vector<double> o(v.obs_dim(), 0.1), a(v.act_dim(), 0.0);
  CHECK_THROWS_AS((void)v.q_value(o, a), DimensionError);
  CHECK_THROWS_AS((void)q.value(o), DimensionError);
}

TEST_CASE("critic gradients match finite differences") {
  const auto ts = make_set(cyclic_arm_spec(3));
  auto critic = make_critic(ts, PooledCritic::Mode::V, 47);
  Rng rng(19, 0);
  const auto o = random_obs(critic.obs_dim(), rng);

  PooledCritic::TapeSet tape;
  critic.value(o, &tape);
  auto grads = critic.zero_grads();
  critic.backward(tape, 1.0, grads);
  std::vector<double> analytic;
  for (const auto* net : {&grads.feature, &grads.head})
    for (const auto& l : net->layers) {
      analytic.insert(analytic.end(), l.w.begin(), l.w.end());
      analytic.insert(analytic.end(), l.b.begin(), l.b.end());
    }

  std::vector<double*> ptrs;
  for (auto* net : {&critic.feature_net, &critic.head_net})
    for (auto& l : net->layers) {
      for (auto& w : l.w) ptrs.push_back(&w);
      for (auto& b : l.b) ptrs.push_back(&b);
    }
  auto f = [&]() { return critic.value(o); };
  const auto numeric = oracle::finite_diff(f, ptrs);
  for (size_t k = 0; k < numeric.size(); ++k) {
    const double rel = std::abs(analytic[k] - numeric[k]) /
                       std::max(1e-4, std::abs(numeric[k]));
    CHECK(rel <= 1e-4);
  }
}
