#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace symrl {

// One logged record; named values map onto the fixed CSV schema.
struct MetricsRow {
  std::string phase;                 // train | eval
  long env_steps = -1;               // -1 leaves the column empty
  long grad_steps = -1;
  std::vector<std::pair<std::string, double>> values;

  void set(const std::string& name, double v) { values.emplace_back(name, v); }
};

// CSV sink with a versioned schema; the header is written exactly once and
// step counters must not decrease.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, std::string run_id, std::uint64_t seed,
                std::string variant, std::string algorithm);

  void write(const MetricsRow& row);
  const std::string& path() const { return path_; }

  static const std::vector<std::string>& metric_columns();
  static const char* schema_line();

 private:
  std::string path_, run_id_, variant_, algorithm_;
  std::uint64_t seed_;
  std::ofstream os_;
  long last_env_steps_ = -1;
  long last_grad_steps_ = -1;
};

std::string format_metric(double v);

}  // namespace symrl
