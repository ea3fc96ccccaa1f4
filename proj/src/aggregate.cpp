#include "symrl/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "symrl/errors.hpp"
#include "symrl/metrics.hpp"

namespace symrl {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw ConfigError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

struct SeedCurve {
  std::string variant;
  std::vector<std::pair<long, double>> points;  // (step, metric)
};

SeedCurve read_curve(const std::filesystem::path& file,
                     const AggregateOptions& opts) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot open '" + file.string() + "'");
  std::string line;
  if (!std::getline(is, line) || line != MetricsWriter::schema_line())
    throw ConfigError("'" + file.string() + "' is not a metrics CSV");
  if (!std::getline(is, line))
    throw ConfigError("'" + file.string() + "' has no header");
  const auto header = split_csv_line(line);
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw ConfigError("'" + file.string() + "' lacks column '" + name + "'");
    return static_cast<size_t>(it - header.begin());
  };
  const size_t c_variant = col("variant");
  const size_t c_phase = col("phase");
  const size_t c_env = col("env_steps");
  const size_t c_grad = col("grad_steps");
  const size_t c_metric = col(opts.metric);

  SeedCurve curve;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() <= c_metric) continue;
    if (f[c_phase] != opts.phase) continue;
    if (f[c_metric].empty()) continue;
    curve.variant = f[c_variant];
    const std::string& step_str = !f[c_env].empty() ? f[c_env] : f[c_grad];
    if (step_str.empty()) continue;
    curve.points.emplace_back(std::stol(step_str), std::stod(f[c_metric]));
  }
  return curve;
}

}  // namespace

AggregateSummary aggregate_runs(const std::string& run_dir,
                                const std::string& output_path,
                                const AggregateOptions& opts) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(run_dir))
    throw ConfigError("'" + run_dir + "' is not a directory");
  for (const auto& e : std::filesystem::directory_iterator(run_dir))
    if (e.is_regular_file() && e.path().extension() == ".csv" &&
        e.path().filename().string().rfind("summary", 0) != 0)
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw ConfigError("no metrics CSV files under '" + run_dir + "'");

  std::map<std::string, std::vector<SeedCurve>> by_variant;
  AggregateSummary summary;
  for (const auto& f : files) {
    SeedCurve c = read_curve(f, opts);
    if (c.points.empty()) continue;
    by_variant[c.variant].push_back(std::move(c));
    summary.seed_files += 1;
  }
  if (by_variant.empty())
    throw ConfigError("no '" + opts.phase + "' rows with metric '" +
                      opts.metric + "' under '" + run_dir + "'");

  std::ofstream os(output_path);
  if (!os) throw ConfigError("cannot write '" + output_path + "'");
  os << "variant,step," << opts.metric << "_median," << opts.metric << "_p25,"
     << opts.metric << "_p75,seeds\n";
  for (auto& [variant, curves] : by_variant) {
    size_t len = curves.front().points.size();
    for (const auto& c : curves) len = std::min(len, c.points.size());
    for (const auto& c : curves)
      if (c.points.size() != len) {
        summary.truncated = true;
        std::cerr << "aggregate: truncating '" << variant << "' curves to "
                  << len << " rows (mixed lengths)\n";
        break;
      }
    for (size_t k = 0; k < len; ++k) {
      std::vector<double> vals;
      for (const auto& c : curves) vals.push_back(c.points[k].second);
      std::sort(vals.begin(), vals.end());
      os << variant << "," << curves.front().points[k].first << ","
         << format_metric(quantile_sorted(vals, 0.5)) << ","
         << format_metric(quantile_sorted(vals, 0.25)) << ","
         << format_metric(quantile_sorted(vals, 0.75)) << "," << vals.size()
         << "\n";
    }
  }
  summary.output_path = output_path;
  return summary;
}

}  // namespace symrl
