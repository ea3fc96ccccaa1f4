#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symrl/agent.hpp"
#include "symrl/env.hpp"

#include <json.hpp>

namespace symrl {

struct PpoConfig {
  double gamma = 0.99;
  double tau = 0.95;
  double e_clip = 0.2;
  double entropy_coef = 0.0;
  double critic_coef = 2.0;
  double learning_rate = 3e-4;
  int mini_epochs = 4;
  double kl_threshold = 0.0008;
  double grad_norm_clip = 1.0;
  bool value_bootstrap = true;
  bool normalize_input = true;
  bool normalize_value = true;
  bool normalize_advantage = true;
  int num_actors = 64;
  int horizon_length = 32;
  int minibatch_size = 512;
  bool linear_lr_decay = false;  // anneal the step size to zero over the run
  double sym_w_policy = 1.0;     // SASA only
  double sym_w_value = 0.5;      // SASA only

  void validate() const;
};

struct BcConfig {
  int grad_steps = 2000;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double val_fraction = 0.1;   // held-out episodes for validation likelihood
  int log_every = 200;

  void validate() const;
};

struct IqlConfig {
  double expectile = 0.7;
  double awr_temperature = 3.0;
  double gamma = 0.99;
  double target_update_rate = 0.005;
  int grad_steps = 3000;
  int batch_size = 256;
  double learning_rate = 3e-4;
  double adv_weight_clip = 100.0;
  int log_every = 200;

  void validate() const;
};

struct RunConfig {
  std::string run_id;
  EnvConfig env;
  Variant variant = Variant::MASA;
  std::string algorithm = "ppo";  // ppo | bc | iql
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "runs";
  long total_env_steps = 200000;  // ppo budget
  int eval_episodes = 100;
  std::string dataset_path;       // bc/iql input
  NetSpec net;
  PpoConfig ppo;
  BcConfig bc;
  IqlConfig iql;

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

RunConfig load_run_config(const std::string& path);

// Output directory after applying the SYMRL_OUTPUT_ROOT override.
std::string resolve_output_dir(const std::string& dir);

}  // namespace symrl
