#include "symrl/agent.hpp"

#include <fstream>

#include "symrl/checkpoint.hpp"
#include "symrl/errors.hpp"

namespace symrl {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::SA: return "SA";
    case Variant::SASA: return "SASA";
    case Variant::MA: return "MA";
    case Variant::MASA: return "MASA";
  }
  return "?";
}

Variant variant_from_name(const std::string& s) {
  if (s == "SA") return Variant::SA;
  if (s == "SASA") return Variant::SASA;
  if (s == "MA") return Variant::MA;
  if (s == "MASA") return Variant::MASA;
  throw ConfigError("unknown variant '" + s + "'");
}

std::vector<int> NetSpec::critic_feature_hidden() const {
  return {hidden.begin(), hidden.end() - 1};
}

int NetSpec::critic_feature_width() const { return hidden.back(); }

std::vector<int> NetSpec::critic_head_hidden() const {
  return {hidden.back()};
}

std::pair<std::shared_ptr<const TransformSet>, BranchView> variant_structure(
    Variant v, const SymmetrySpec& env_spec) {
  switch (v) {
    case Variant::SA:
    case Variant::SASA: {
      auto ts = std::make_shared<TransformSet>(
          build_transform_set(trivialize(env_spec)));
      return {ts, BranchView{true, false}};
    }
    case Variant::MA: {
      auto ts = std::make_shared<TransformSet>(build_transform_set(env_spec));
      return {ts, BranchView{false, true}};
    }
    case Variant::MASA: {
      auto ts = std::make_shared<TransformSet>(build_transform_set(env_spec));
      return {ts, BranchView{true, false}};
    }
  }
  throw ConfigError("unknown variant");
}

Agent make_agent(Variant v, const Env& env, const NetSpec& spec,
                 std::uint64_t seed) {
  return make_agent(v, env.transforms_ptr(), spec, seed);
}

Agent make_agent(Variant v, std::shared_ptr<const TransformSet> env_ts,
                 const NetSpec& spec, std::uint64_t seed) {
  Agent a;
  a.variant = v;
  a.net_spec = spec;
  a.env_ts = std::move(env_ts);
  auto [net_ts, view] = variant_structure(v, a.env_ts->spec);
  a.net_ts = net_ts;
  a.policy = SharedPolicy(net_ts, view, spec.hidden, spec.activation,
                          derive_seed(seed, 0x90), spec.log_std_init);
  a.critic = PooledCritic(net_ts, view, PooledCritic::Mode::V,
                          spec.critic_feature_hidden(),
                          spec.critic_feature_width(),
                          spec.critic_head_hidden(), spec.activation,
                          derive_seed(seed, 0x91));
  a.obs_norm = ObsNormalizer(a.env_ts);
  return a;
}

void save_agent(const Agent& agent, const EnvConfig& env_cfg,
                const std::string& algorithm, const std::string& path) {
  Checkpoint ck;
  ck.put_net("policy_net", agent.policy.net);
  ck.put_raw("policy_log_std", agent.policy.log_std);
  ck.put_net("critic_feature", agent.critic.feature_net);
  ck.put_net("critic_head", agent.critic.head_net);
  ck.put_raw("obs_norm", agent.obs_norm.state());
  ck.put_raw("val_norm", agent.val_norm.state());
  save_checkpoint(ck, path);

  nlohmann::json side;
  side["format"] = "symrl-agent";
  side["version"] = 1;
  side["algorithm"] = algorithm;
  side["variant"] = variant_name(agent.variant);
  side["env"] = env_cfg.to_json();
  side["env_spec"] = agent.env_ts->spec.to_json();
  side["net_spec"] = {
      {"hidden", agent.net_spec.hidden},
      {"activation",
       agent.net_spec.activation == Activation::Elu ? "elu" : "tanh"},
      {"log_std_init", agent.net_spec.log_std_init}};
  std::ofstream os(path + ".spec.json");
  if (!os) throw ConfigError("cannot write sidecar for '" + path + "'");
  os << side.dump(2) << "\n";
}

Agent load_agent(const std::string& path, EnvConfig* env_cfg_out,
                 std::string* algorithm_out) {
  std::ifstream is(path + ".spec.json");
  if (!is)
    throw ConfigError("missing sidecar '" + path + ".spec.json'");
  nlohmann::json side = nlohmann::json::parse(is);
  if (side.at("format").get<std::string>() != "symrl-agent")
    throw ConfigError("'" + path + ".spec.json' is not an agent sidecar");

  EnvConfig env_cfg = EnvConfig::from_json(side.at("env"));
  if (env_cfg_out) *env_cfg_out = env_cfg;
  if (algorithm_out) *algorithm_out = side.at("algorithm").get<std::string>();

  NetSpec spec;
  spec.hidden = side.at("net_spec").at("hidden").get<std::vector<int>>();
  spec.activation =
      side.at("net_spec").at("activation").get<std::string>() == "tanh"
          ? Activation::Tanh
          : Activation::Elu;
  spec.log_std_init = side.at("net_spec").at("log_std_init").get<double>();

  auto env = make_env(env_cfg);
  Agent a = make_agent(variant_from_name(side.at("variant").get<std::string>()),
                       *env, spec, 0);

  Checkpoint ck = load_checkpoint(path);
  a.policy.net = ck.net("policy_net");
  a.policy.log_std = ck.raw("policy_log_std");
  a.critic.feature_net = ck.net("critic_feature");
  a.critic.head_net = ck.net("critic_head");
  a.obs_norm.restore(ck.raw("obs_norm"));
  a.val_norm.restore(ck.raw("val_norm"));
  return a;
}

}  // namespace symrl
