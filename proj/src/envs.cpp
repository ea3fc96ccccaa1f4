#include "symrl/env.hpp"

#include <algorithm>
#include <cmath>

#include "symrl/errors.hpp"

namespace symrl {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double wrap_angle(double x) { return x - kTwoPi * std::round(x / kTwoPi); }
}

double reward_combine(const RewardTerms& rt) {
  double r = 0.0;
  for (const auto& [name, value] : rt.terms) {
    const auto it = std::find_if(rt.weights.begin(), rt.weights.end(),
                                 [&](const auto& w) { return w.first == name; });
    if (it == rt.weights.end())
      throw ConfigError("reward term '" + name + "' has no weight");
    r += it->second * value;
  }
  return r;
}

// ---------------------------------------------------------------------------
// RotReach: N two-link planar arms sharing one pivot, mounted at base angles
// 2*pi*k/N. Velocity-command kinematics; the target must be touched by any
// fingertip. The target is stored once per arm frame, so the symmetry action
// on the state is a pure permutation.
// ---------------------------------------------------------------------------

class RotReachEnv final : public Env {
 public:
  explicit RotReachEnv(const EnvConfig& cfg, std::uint64_t instance_seed)
      : n_(cfg.n_agents), l1_(cfg.link1), l2_(cfg.link2),
        horizon_(cfg.horizon > 0 ? cfg.horizon : 200) {
    if (n_ < 2 || n_ > 6)
      throw ConfigError("rotreach: n_agents must be in [2, 6], got " +
                        std::to_string(n_));
    if (l1_ <= 0.0 || l2_ <= 0.0)
      throw ConfigError("rotreach: link lengths must be positive");
    spec_ = build_spec();
    if (cfg.trivial_symmetry) spec_ = trivialize(spec_);
    ts_ = std::make_shared<TransformSet>(build_transform_set(spec_));
    q_.assign(2 * n_, 0.0);
    qd_.assign(2 * n_, 0.0);
    target_.assign(2 * n_, 0.0);
    (void)instance_seed;
  }

  const SymmetrySpec& symmetry_spec() const override { return spec_; }
  const TransformSet& transforms() const override { return *ts_; }
  std::shared_ptr<const TransformSet> transforms_ptr() const override {
    return ts_;
  }
  int obs_dim() const override { return 4 * n_ + 2; }
  int act_dim() const override { return 2 * n_; }
  int horizon() const override { return horizon_; }

  std::vector<double> reset(Rng& rng) override {
    std::fill(q_.begin(), q_.end(), 0.0);
    std::fill(qd_.begin(), qd_.end(), 0.0);
    // Area-uniform radius in an annulus reachable by every arm; the outer
    // cap stays clear of the straight-arm singularity at full extension.
    const double reach = l1_ + l2_;
    const double r_lo = std::max(std::abs(l1_ - l2_) + 0.1 * reach, 0.3 * reach);
    const double r_hi = 0.8 * reach;
    const double u = rng.uniform();
    const double radius = std::sqrt(r_lo * r_lo + u * (r_hi * r_hi - r_lo * r_lo));
    const double phi = rng.uniform(0.0, kTwoPi);
    set_target(radius * std::cos(phi), radius * std::sin(phi));
    step_count_ = 0;
    success_ = false;
    return observe();
  }

  StepOut step(std::span<const double> action) override {
    if (static_cast<int>(action.size()) != act_dim())
      throw DimensionError("rotreach: action width " +
                           std::to_string(action.size()) + ", expected " +
                           std::to_string(act_dim()));
    for (int k = 0; k < 2 * n_; ++k) {
      const double cmd = std::clamp(action[k], -1.0, 1.0);
      // The fingertip map is 2*pi-periodic, so angles stay wrapped and the
      // observation range remains compact.
      q_[k] = wrap_angle(q_[k] + kDt * cmd);
      qd_[k] = cmd;
    }
    step_count_ += 1;

    const double dmin = min_tip_distance();
    // Per-arm squared raw-command magnitudes, summed in sorted order so the
    // penalty is independent of the agent labelling. Raw (pre-clamp) values
    // keep pressure on saturated commands.
    std::vector<double> per_arm(n_);
    for (int k = 0; k < n_; ++k)
      per_arm[k] = action[2 * k] * action[2 * k] +
                   action[2 * k + 1] * action[2 * k + 1];
    std::sort(per_arm.begin(), per_arm.end());
    double act_sq = 0.0;
    for (double s : per_arm) act_sq += s;

    RewardTerms rt;
    rt.add("task", -dmin);
    rt.add("action", act_sq);
    rt.weight("task", 1.0);
    rt.weight("action", -0.01);

    StepOut out;
    out.reward = reward_combine(rt);
    success_ = dmin < kSuccessDist;
    out.timeout = step_count_ >= horizon_ && !success_;
    out.done = success_ || step_count_ >= horizon_;
    out.obs = observe();
    return out;
  }

  bool success() const override { return success_; }

  std::vector<double> state() const override {
    std::vector<double> s;
    s.insert(s.end(), q_.begin(), q_.end());
    s.insert(s.end(), qd_.begin(), qd_.end());
    s.insert(s.end(), target_.begin(), target_.end());
    s.push_back(static_cast<double>(step_count_));
    return s;
  }

  void set_state(std::span<const double> s) override {
    if (static_cast<int>(s.size()) != 6 * n_ + 1)
      throw DimensionError("rotreach: bad state width");
    for (int k = 0; k < 2 * n_; ++k) q_[k] = s[k];
    for (int k = 0; k < 2 * n_; ++k) qd_[k] = s[2 * n_ + k];
    for (int k = 0; k < 2 * n_; ++k) target_[k] = s[4 * n_ + k];
    step_count_ = static_cast<int>(s[6 * n_]);
    success_ = false;
  }

  std::vector<double> symmetric_state(std::span<const double> s,
                                      int i) const override {
    std::vector<double> out(s.size());
    for (int slot = 0; slot < n_; ++slot) {
      const int src = (slot + i) % n_;
      for (int k = 0; k < 2; ++k) {
        out[2 * slot + k] = s[2 * src + k];                    // q
        out[2 * n_ + 2 * slot + k] = s[2 * n_ + 2 * src + k];  // qd
        out[4 * n_ + 2 * slot + k] = s[4 * n_ + 2 * src + k];  // target frames
      }
    }
    out[6 * n_] = s[6 * n_];
    return out;
  }

  std::vector<double> random_state(Rng& rng) const override {
    std::vector<double> s(6 * n_ + 1);
    for (int k = 0; k < 2 * n_; ++k) s[k] = rng.uniform(-3.0, 3.0);
    for (int k = 0; k < 2 * n_; ++k) s[2 * n_ + k] = rng.uniform(-1.0, 1.0);
    const double radius = rng.uniform(0.3, 0.9) * (l1_ + l2_);
    const double phi = rng.uniform(0.0, kTwoPi);
    const double tx = radius * std::cos(phi), ty = radius * std::sin(phi);
    for (int k = 0; k < n_; ++k) {
      const double a = -kTwoPi * k / n_;  // world -> arm frame
      s[4 * n_ + 2 * k] = std::cos(a) * tx - std::sin(a) * ty;
      s[4 * n_ + 2 * k + 1] = std::sin(a) * tx + std::cos(a) * ty;
    }
    s[6 * n_] = static_cast<double>(rng.uniform_int(horizon_ - 1));
    return s;
  }

  std::vector<double> observe() const override {
    std::vector<double> o;
    o.reserve(obs_dim());
    for (int k = 0; k < n_; ++k) {
      o.push_back(q_[2 * k]);
      o.push_back(q_[2 * k + 1]);
      o.push_back(qd_[2 * k]);
      o.push_back(qd_[2 * k + 1]);
    }
    o.push_back(target_[0]);  // arm-0 frame == world frame
    o.push_back(target_[1]);
    return o;
  }

  // Fingertip of arm k in its own frame.
  std::pair<double, double> local_tip(int k) const {
    const double a1 = q_[2 * k];
    const double a2 = q_[2 * k] + q_[2 * k + 1];
    return {l1_ * std::cos(a1) + l2_ * std::cos(a2),
            l1_ * std::sin(a1) + l2_ * std::sin(a2)};
  }

  double min_tip_distance() const {
    double dmin = 1e300;
    for (int k = 0; k < n_; ++k) {
      const auto [x, y] = local_tip(k);
      const double dx = x - target_[2 * k];
      const double dy = y - target_[2 * k + 1];
      dmin = std::min(dmin, std::hypot(dx, dy));
    }
    return dmin;
  }

  double target_x() const { return target_[0]; }
  double target_y() const { return target_[1]; }
  int arms() const { return n_; }
  double link1() const { return l1_; }
  double link2() const { return l2_; }
  const std::vector<double>& joints() const { return q_; }
  // Target expressed in arm k's frame.
  std::pair<double, double> target_in_frame(int k) const {
    return {target_[2 * k], target_[2 * k + 1]};
  }

  static constexpr double kDt = 0.05;
  static constexpr double kSuccessDist = 0.05;

 private:
  SymmetrySpec build_spec() const {
    SymmetrySpec spec;
    spec.group = GroupKind::Cyclic;
    spec.group_size = n_;
    for (int k = 0; k < n_; ++k)
      spec.obs_layout.blocks.push_back(
          {"arm" + std::to_string(k), 4, BlockKind::AgentIndexed, {}});
    Block target{"target", 2, BlockKind::CentralVariant, {}};
    target.rule.type = RuleType::PlanarRotate;
    target.rule.rotate_pairs = {{0, 1}};
    spec.obs_layout.blocks.push_back(target);
    spec.obs_layout.total_width = 4 * n_ + 2;
    for (int k = 0; k < n_; ++k)
      spec.act_layout.blocks.push_back(
          {"cmd" + std::to_string(k), 2, BlockKind::AgentIndexed, {}});
    spec.act_layout.total_width = 2 * n_;
    spec.validate();
    return spec;
  }

  void set_target(double tx, double ty) {
    for (int k = 0; k < n_; ++k) {
      const double a = -kTwoPi * k / n_;
      target_[2 * k] = std::cos(a) * tx - std::sin(a) * ty;
      target_[2 * k + 1] = std::sin(a) * tx + std::cos(a) * ty;
    }
  }

  int n_;
  double l1_, l2_;
  int horizon_;
  SymmetrySpec spec_;
  std::shared_ptr<TransformSet> ts_;
  std::vector<double> q_, qd_, target_;
  int step_count_ = 0;
  bool success_ = false;
};

// ---------------------------------------------------------------------------
// ThrusterPole: cart on a rail with a hinged pole; a central cart force plus
// two tip thrusters whose per-agent heat states accumulate usage. Reflection
// symmetry across the rail's midpoint.
// ---------------------------------------------------------------------------

class ThrusterPoleEnv final : public Env {
 public:
  explicit ThrusterPoleEnv(const EnvConfig& cfg)
      : horizon_(cfg.horizon > 0 ? cfg.horizon : 500) {
    spec_ = build_spec();
    if (cfg.trivial_symmetry) spec_ = trivialize(spec_);
    ts_ = std::make_shared<TransformSet>(build_transform_set(spec_));
  }

  const SymmetrySpec& symmetry_spec() const override { return spec_; }
  const TransformSet& transforms() const override { return *ts_; }
  std::shared_ptr<const TransformSet> transforms_ptr() const override {
    return ts_;
  }
  int obs_dim() const override { return 6; }
  int act_dim() const override { return 3; }
  int horizon() const override { return horizon_; }

  std::vector<double> reset(Rng& rng) override {
    x_ = rng.uniform(-0.05, 0.05);
    xd_ = rng.uniform(-0.05, 0.05);
    th_ = rng.uniform(-0.05, 0.05);
    thd_ = rng.uniform(-0.05, 0.05);
    h_left_ = h_right_ = 0.0;
    step_count_ = 0;
    fallen_ = false;
    return observe();
  }

  StepOut step(std::span<const double> action) override {
    if (static_cast<int>(action.size()) != act_dim())
      throw DimensionError("thrusterpole: action width " +
                           std::to_string(action.size()) + ", expected 3");
    const double f_cmd = std::clamp(action[0], -1.0, 1.0);
    const double a_left = std::clamp(action[1], 0.0, 1.0);
    const double a_right = std::clamp(action[2], 0.0, 1.0);
    const double tip = a_right - a_left;

    const double force = kForceMag * f_cmd;
    const double sin_th = std::sin(th_);
    const double cos_th = std::cos(th_);
    const double temp =
        (force + kPoleMassLength * thd_ * thd_ * sin_th) / kTotalMass;
    const double th_acc =
        (kGravity * sin_th - cos_th * temp + kTipMag * tip * cos_th) /
        (kLength * (4.0 / 3.0 - kMassPole * cos_th * cos_th / kTotalMass));
    const double x_acc = temp - kPoleMassLength * th_acc * cos_th / kTotalMass;

    x_ += kDt * xd_;
    xd_ += kDt * x_acc;
    th_ += kDt * thd_;
    thd_ += kDt * th_acc;
    h_left_ = kHeatDecay * h_left_ + a_left;
    h_right_ = kHeatDecay * h_right_ + a_right;
    step_count_ += 1;

    StepOut out;
    fallen_ = std::abs(th_) > kFallAngle;
    if (fallen_) {
      out.reward = -1.0;
      out.done = true;
      out.timeout = false;
    } else {
      RewardTerms rt;
      rt.add("alive", 1.0);
      rt.add("posture", -(0.1 * x_ * x_ + 0.5 * th_ * th_));
      rt.add("action", f_cmd * f_cmd + (a_left * a_left + a_right * a_right));
      rt.weight("alive", 1.0);
      rt.weight("posture", 1.0);
      rt.weight("action", -0.01);
      out.reward = reward_combine(rt);
      out.timeout = step_count_ >= horizon_;
      out.done = out.timeout;
    }
    out.obs = observe();
    return out;
  }

  bool success() const override { return !fallen_ && step_count_ >= horizon_; }

  std::vector<double> state() const override {
    return {x_, xd_, th_, thd_, h_left_, h_right_,
            static_cast<double>(step_count_)};
  }

  void set_state(std::span<const double> s) override {
    if (s.size() != 7) throw DimensionError("thrusterpole: bad state width");
    x_ = s[0];
    xd_ = s[1];
    th_ = s[2];
    thd_ = s[3];
    h_left_ = s[4];
    h_right_ = s[5];
    step_count_ = static_cast<int>(s[6]);
    fallen_ = std::abs(th_) > kFallAngle;
  }

  std::vector<double> symmetric_state(std::span<const double> s,
                                      int i) const override {
    if (i % 2 == 0) return {s.begin(), s.end()};
    return {-s[0], -s[1], -s[2], -s[3], s[5], s[4], s[6]};
  }

  std::vector<double> random_state(Rng& rng) const override {
    return {rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(-0.7, 0.7),
            rng.uniform(-1.5, 1.5),
            rng.uniform(0.0, 3.0),
            rng.uniform(0.0, 3.0),
            static_cast<double>(rng.uniform_int(horizon_ - 1))};
  }

  std::vector<double> observe() const override {
    return {x_, xd_, th_, thd_, h_left_, h_right_};
  }

  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kTotalMass = kMassCart + kMassPole;
  static constexpr double kLength = 0.5;  // pole half-length
  static constexpr double kPoleMassLength = kMassPole * kLength;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTipMag = 4.0;
  static constexpr double kDt = 0.02;
  static constexpr double kHeatDecay = 0.95;
  static constexpr double kFallAngle = 0.8;

 private:
  SymmetrySpec build_spec() const {
    SymmetrySpec spec;
    spec.group = GroupKind::Reflection;
    spec.group_size = 2;
    Block pose{"pose", 4, BlockKind::CentralVariant, {}};
    pose.rule.type = RuleType::SignFlip;
    pose.rule.flip_mask = {true, true, true, true};
    spec.obs_layout.blocks.push_back(pose);
    spec.obs_layout.blocks.push_back(
        {"heat_left", 1, BlockKind::AgentIndexed, {}});
    spec.obs_layout.blocks.push_back(
        {"heat_right", 1, BlockKind::AgentIndexed, {}});
    spec.obs_layout.total_width = 6;
    Block force{"force", 1, BlockKind::CentralVariant, {}};
    force.rule.type = RuleType::SignFlip;
    force.rule.flip_mask = {true};
    spec.act_layout.blocks.push_back(force);
    spec.act_layout.blocks.push_back(
        {"thrust_left", 1, BlockKind::AgentIndexed, {}});
    spec.act_layout.blocks.push_back(
        {"thrust_right", 1, BlockKind::AgentIndexed, {}});
    spec.act_layout.total_width = 3;
    spec.validate();
    return spec;
  }

  int horizon_;
  SymmetrySpec spec_;
  std::shared_ptr<TransformSet> ts_;
  double x_ = 0, xd_ = 0, th_ = 0, thd_ = 0, h_left_ = 0, h_right_ = 0;
  int step_count_ = 0;
  bool fallen_ = false;
};

nlohmann::json EnvConfig::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  if (id == "rotreach") {
    j["n_arms"] = n_agents;
    j["link_lengths"] = {link1, link2};
  }
  if (horizon > 0) j["horizon"] = horizon;
  if (trivial_symmetry) j["trivial_symmetry"] = true;
  return j;
}

EnvConfig EnvConfig::from_json(const nlohmann::json& j) {
  EnvConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "id") cfg.id = value.get<std::string>();
    else if (key == "n_arms") cfg.n_agents = value.get<int>();
    else if (key == "link_lengths") {
      cfg.link1 = value.at(0).get<double>();
      cfg.link2 = value.at(1).get<double>();
    } else if (key == "horizon") cfg.horizon = value.get<int>();
    else if (key == "trivial_symmetry") cfg.trivial_symmetry = value.get<bool>();
    else if (key.rfind("_note", 0) == 0) continue;
    else throw ConfigError("env: unknown key '" + key + "'");
  }
  if (cfg.id.empty()) throw ConfigError("env: missing 'id'");
  return cfg;
}

std::unique_ptr<Env> make_env(const EnvConfig& cfg) {
  if (cfg.id == "rotreach") return std::make_unique<RotReachEnv>(cfg, 0);
  if (cfg.id == "thrusterpole") return std::make_unique<ThrusterPoleEnv>(cfg);
  throw ConfigError("unknown env id '" + cfg.id + "'");
}

SymmetrySpec env_symmetry_spec(const EnvConfig& cfg) {
  return make_env(cfg)->symmetry_spec();
}

CommutationReport check_mdp_symmetry(Env& env, int probes,
                                     std::uint64_t seed) {
  CommutationReport rep;
  Rng rng(seed, 0xC0);
  const auto& ts = env.transforms();
  const int n = ts.group_size();
  const int aw = env.act_dim();
  std::vector<double> action(aw), t_action(aw), t_obs(env.obs_dim());
  for (int p = 0; p < probes; ++p) {
    const auto s = env.random_state(rng);
    for (auto& a : action) a = rng.uniform(-1.2, 1.2);
    env.set_state(s);
    const auto base = env.step(action);
    for (int i = 1; i < n; ++i) {
      env.set_state(env.symmetric_state(s, i));
      ts.act[i].apply(action, t_action);
      const auto alt = env.step(t_action);
      ts.obs[i].apply(base.obs, t_obs);
      for (int d = 0; d < env.obs_dim(); ++d)
        rep.max_obs_residual =
            std::max(rep.max_obs_residual, std::abs(alt.obs[d] - t_obs[d]));
      rep.max_reward_diff =
          std::max(rep.max_reward_diff, std::abs(alt.reward - base.reward));
      if (alt.done != base.done) rep.done_mismatches += 1;
    }
  }
  return rep;
}

}  // namespace symrl
