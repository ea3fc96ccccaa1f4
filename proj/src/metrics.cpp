#include "symrl/metrics.hpp"

#include <cstdio>

#include "symrl/errors.hpp"

namespace symrl {

const std::vector<std::string>& MetricsWriter::metric_columns() {
  static const std::vector<std::string> cols = {
      "episodic_return_mean", "success_rate", "policy_loss", "value_loss",
      "approx_kl", "clip_frac", "entropy", "epochs_used", "policy_sym_loss",
      "value_sym_loss", "bc_loss", "q_loss", "v_loss", "awr_loss",
      "mean_return"};
  return cols;
}

const char* MetricsWriter::schema_line() { return "# symrl-metrics-v1"; }

std::string format_metric(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

MetricsWriter::MetricsWriter(const std::string& path, std::string run_id,
                             std::uint64_t seed, std::string variant,
                             std::string algorithm)
    : path_(path), run_id_(std::move(run_id)), variant_(std::move(variant)),
      algorithm_(std::move(algorithm)), seed_(seed) {
  os_.open(path);
  if (!os_) throw ConfigError("cannot open metrics file '" + path + "'");
  os_ << schema_line() << "\n";
  os_ << "run_id,seed,variant,algorithm,phase,env_steps,grad_steps";
  for (const auto& c : metric_columns()) os_ << "," << c;
  os_ << "\n";
}

void MetricsWriter::write(const MetricsRow& row) {
  if (row.env_steps >= 0 && row.env_steps < last_env_steps_)
    throw ConfigError("metrics: env_steps decreased");
  if (row.grad_steps >= 0 && row.grad_steps < last_grad_steps_)
    throw ConfigError("metrics: grad_steps decreased");
  if (row.env_steps >= 0) last_env_steps_ = row.env_steps;
  if (row.grad_steps >= 0) last_grad_steps_ = row.grad_steps;

  os_ << run_id_ << "," << seed_ << "," << variant_ << "," << algorithm_ << ","
      << row.phase << ",";
  if (row.env_steps >= 0) os_ << row.env_steps;
  os_ << ",";
  if (row.grad_steps >= 0) os_ << row.grad_steps;
  for (const auto& col : metric_columns()) {
    os_ << ",";
    for (const auto& [name, v] : row.values) {
      if (name == col) {
        os_ << format_metric(v);
        break;
      }
    }
  }
  os_ << "\n";
  os_.flush();
}

}  // namespace symrl
