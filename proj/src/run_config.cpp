#include "symrl/run_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "symrl/errors.hpp"

namespace symrl {

namespace {

void check_range(const char* field, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi))
    throw ConfigError(std::string("config field '") + field + "' = " +
                      std::to_string(v) + " is outside [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

void check_positive(const char* field, double v) {
  if (!(v > 0.0))
    throw ConfigError(std::string("config field '") + field +
                      "' must be positive");
}

bool is_note(const std::string& key) { return key.rfind("_note", 0) == 0; }

}  // namespace

void PpoConfig::validate() const {
  check_range("gamma", gamma, 0.0, 1.0);
  check_range("tau", tau, 0.0, 1.0);
  check_positive("e_clip", e_clip);
  check_positive("learning_rate", learning_rate);
  check_positive("critic_coef", critic_coef);
  if (mini_epochs < 1) throw ConfigError("config field 'mini_epochs' must be >= 1");
  if (num_actors < 1) throw ConfigError("config field 'num_actors' must be >= 1");
  if (horizon_length < 1)
    throw ConfigError("config field 'horizon_length' must be >= 1");
  if (minibatch_size < 1)
    throw ConfigError("config field 'minibatch_size' must be >= 1");
  if (kl_threshold < 0.0)
    throw ConfigError("config field 'kl_threshold' must be >= 0");
  if (entropy_coef < 0.0)
    throw ConfigError("config field 'entropy_coef' must be >= 0");
  if (sym_w_policy < 0.0 || sym_w_value < 0.0)
    throw ConfigError("config field 'sym_loss_weights' must be >= 0");
}

void BcConfig::validate() const {
  if (grad_steps < 1) throw ConfigError("config field 'grad_steps' must be >= 1");
  if (batch_size < 1) throw ConfigError("config field 'batch_size' must be >= 1");
  check_positive("learning_rate", learning_rate);
  check_range("val_fraction", val_fraction, 0.0, 0.5);
}

void IqlConfig::validate() const {
  if (!(expectile > 0.5 && expectile < 1.0))
    throw ConfigError("config field 'expectile' must be in (0.5, 1)");
  check_positive("awr_temperature", awr_temperature);
  check_range("gamma", gamma, 0.0, 1.0);
  check_range("target_update_rate", target_update_rate, 0.0, 1.0);
  if (grad_steps < 1) throw ConfigError("config field 'grad_steps' must be >= 1");
  if (batch_size < 1) throw ConfigError("config field 'batch_size' must be >= 1");
  check_positive("learning_rate", learning_rate);
  check_positive("adv_weight_clip", adv_weight_clip);
}

void RunConfig::validate() const {
  if (run_id.empty()) throw ConfigError("config field 'run_id' is required");
  if (seeds.empty()) throw ConfigError("config field 'seeds' must be non-empty");
  if (algorithm != "ppo" && algorithm != "bc" && algorithm != "iql")
    throw ConfigError("config field 'algorithm' must be ppo, bc or iql");
  if (algorithm == "ppo" && total_env_steps < 1)
    throw ConfigError("config field 'total_env_steps' must be >= 1");
  if ((algorithm == "bc" || algorithm == "iql") && dataset_path.empty())
    throw ConfigError("config field 'dataset' is required for offline runs");
  if (eval_episodes < 1)
    throw ConfigError("config field 'eval_episodes' must be >= 1");
  for (int h : net.hidden)
    if (h < 1) throw ConfigError("config field 'hidden' widths must be >= 1");
  if (net.hidden.empty())
    throw ConfigError("config field 'hidden' must list at least one width");
  ppo.validate();
  bc.validate();
  iql.validate();
}

namespace {

PpoConfig ppo_from_json(const nlohmann::json& j) {
  PpoConfig c;
  for (const auto& [key, v] : j.items()) {
    if (is_note(key)) continue;
    else if (key == "gamma") c.gamma = v.get<double>();
    else if (key == "tau") c.tau = v.get<double>();
    else if (key == "e_clip") c.e_clip = v.get<double>();
    else if (key == "entropy_coef") c.entropy_coef = v.get<double>();
    else if (key == "critic_coef") c.critic_coef = v.get<double>();
    else if (key == "learning_rate") c.learning_rate = v.get<double>();
    else if (key == "mini_epochs") c.mini_epochs = v.get<int>();
    else if (key == "kl_threshold") c.kl_threshold = v.get<double>();
    else if (key == "grad_norm_clip") c.grad_norm_clip = v.get<double>();
    else if (key == "value_bootstrap") c.value_bootstrap = v.get<bool>();
    else if (key == "normalize_input") c.normalize_input = v.get<bool>();
    else if (key == "normalize_value") c.normalize_value = v.get<bool>();
    else if (key == "normalize_advantage") c.normalize_advantage = v.get<bool>();
    else if (key == "num_actors") c.num_actors = v.get<int>();
    else if (key == "horizon_length") c.horizon_length = v.get<int>();
    else if (key == "minibatch_size") c.minibatch_size = v.get<int>();
    else if (key == "linear_lr_decay") c.linear_lr_decay = v.get<bool>();
    else if (key == "sym_loss_weights") {
      for (const auto& [wk, wv] : v.items()) {
        if (is_note(wk)) continue;
        else if (wk == "policy") c.sym_w_policy = wv.get<double>();
        else if (wk == "value") c.sym_w_value = wv.get<double>();
        else throw ConfigError("config: unknown key 'ppo.sym_loss_weights." + wk + "'");
      }
    } else {
      throw ConfigError("config: unknown key 'ppo." + key + "'");
    }
  }
  return c;
}

BcConfig bc_from_json(const nlohmann::json& j) {
  BcConfig c;
  for (const auto& [key, v] : j.items()) {
    if (is_note(key)) continue;
    else if (key == "grad_steps") c.grad_steps = v.get<int>();
    else if (key == "batch_size") c.batch_size = v.get<int>();
    else if (key == "learning_rate") c.learning_rate = v.get<double>();
    else if (key == "val_fraction") c.val_fraction = v.get<double>();
    else if (key == "log_every") c.log_every = v.get<int>();
    else throw ConfigError("config: unknown key 'bc." + key + "'");
  }
  return c;
}

IqlConfig iql_from_json(const nlohmann::json& j) {
  IqlConfig c;
  for (const auto& [key, v] : j.items()) {
    if (is_note(key)) continue;
    else if (key == "expectile") c.expectile = v.get<double>();
    else if (key == "awr_temperature") c.awr_temperature = v.get<double>();
    else if (key == "gamma") c.gamma = v.get<double>();
    else if (key == "target_update_rate") c.target_update_rate = v.get<double>();
    else if (key == "grad_steps") c.grad_steps = v.get<int>();
    else if (key == "batch_size") c.batch_size = v.get<int>();
    else if (key == "learning_rate") c.learning_rate = v.get<double>();
    else if (key == "adv_weight_clip") c.adv_weight_clip = v.get<double>();
    else if (key == "log_every") c.log_every = v.get<int>();
    else throw ConfigError("config: unknown key 'iql." + key + "'");
  }
  return c;
}

NetSpec net_from_json(const nlohmann::json& j) {
  NetSpec n;
  for (const auto& [key, v] : j.items()) {
    if (is_note(key)) continue;
    else if (key == "hidden") n.hidden = v.get<std::vector<int>>();
    else if (key == "activation") {
      const std::string a = v.get<std::string>();
      if (a == "elu") n.activation = Activation::Elu;
      else if (a == "tanh") n.activation = Activation::Tanh;
      else throw ConfigError("config: unknown activation '" + a + "'");
    } else if (key == "log_std_init") n.log_std_init = v.get<double>();
    else throw ConfigError("config: unknown key 'net." + key + "'");
  }
  return n;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig rc;
  for (const auto& [key, v] : j.items()) {
    if (is_note(key)) continue;
    else if (key == "run_id") rc.run_id = v.get<std::string>();
    else if (key == "env") rc.env = EnvConfig::from_json(v);
    else if (key == "variant") rc.variant = variant_from_name(v.get<std::string>());
    else if (key == "algorithm") rc.algorithm = v.get<std::string>();
    else if (key == "seeds") rc.seeds = v.get<std::vector<std::uint64_t>>();
    else if (key == "output_dir") rc.output_dir = v.get<std::string>();
    else if (key == "total_env_steps") rc.total_env_steps = v.get<long>();
    else if (key == "eval_episodes") rc.eval_episodes = v.get<int>();
    else if (key == "dataset") rc.dataset_path = v.get<std::string>();
    else if (key == "net") rc.net = net_from_json(v);
    else if (key == "ppo") rc.ppo = ppo_from_json(v);
    else if (key == "bc") rc.bc = bc_from_json(v);
    else if (key == "iql") rc.iql = iql_from_json(v);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  rc.validate();
  return rc;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["run_id"] = run_id;
  j["env"] = env.to_json();
  j["variant"] = variant_name(variant);
  j["algorithm"] = algorithm;
  j["seeds"] = seeds;
  j["output_dir"] = output_dir;
  j["total_env_steps"] = total_env_steps;
  j["eval_episodes"] = eval_episodes;
  if (!dataset_path.empty()) j["dataset"] = dataset_path;
  j["net"] = {{"hidden", net.hidden},
              {"activation", net.activation == Activation::Elu ? "elu" : "tanh"},
              {"log_std_init", net.log_std_init}};
  j["ppo"] = {{"gamma", ppo.gamma},
              {"tau", ppo.tau},
              {"e_clip", ppo.e_clip},
              {"entropy_coef", ppo.entropy_coef},
              {"critic_coef", ppo.critic_coef},
              {"learning_rate", ppo.learning_rate},
              {"mini_epochs", ppo.mini_epochs},
              {"kl_threshold", ppo.kl_threshold},
              {"grad_norm_clip", ppo.grad_norm_clip},
              {"value_bootstrap", ppo.value_bootstrap},
              {"normalize_input", ppo.normalize_input},
              {"normalize_value", ppo.normalize_value},
              {"normalize_advantage", ppo.normalize_advantage},
              {"num_actors", ppo.num_actors},
              {"horizon_length", ppo.horizon_length},
              {"minibatch_size", ppo.minibatch_size},
              {"linear_lr_decay", ppo.linear_lr_decay},
              {"sym_loss_weights",
               {{"policy", ppo.sym_w_policy}, {"value", ppo.sym_w_value}}}};
  j["bc"] = {{"grad_steps", bc.grad_steps},
             {"batch_size", bc.batch_size},
             {"learning_rate", bc.learning_rate},
             {"val_fraction", bc.val_fraction},
             {"log_every", bc.log_every}};
  j["iql"] = {{"expectile", iql.expectile},
              {"awr_temperature", iql.awr_temperature},
              {"gamma", iql.gamma},
              {"target_update_rate", iql.target_update_rate},
              {"grad_steps", iql.grad_steps},
              {"batch_size", iql.batch_size},
              {"learning_rate", iql.learning_rate},
              {"adv_weight_clip", iql.adv_weight_clip},
              {"log_every", iql.log_every}};
  return j;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  return RunConfig::from_json(j);
}

std::string resolve_output_dir(const std::string& dir) {
  const char* root = std::getenv("SYMRL_OUTPUT_ROOT");
  if (root == nullptr || dir.empty() ||
      std::filesystem::path(dir).is_absolute())
    return dir;
  return (std::filesystem::path(root) / dir).string();
}

}  // namespace symrl
