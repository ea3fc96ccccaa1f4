#pragma once

#include <string>
#include <vector>

namespace symrl {

// Linear-interpolation quantile of a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p);

struct AggregateOptions {
  std::string metric = "episodic_return_mean";
  std::string phase = "train";
};

struct AggregateSummary {
  int seed_files = 0;
  bool truncated = false;  // mixed-length inputs were cut to the shortest
  std::string output_path;
};

// Reads every per-seed metrics CSV under `run_dir` and writes one row per
// (variant, step bucket) with median/p25/p75 across seeds.
AggregateSummary aggregate_runs(const std::string& run_dir,
                                const std::string& output_path,
                                const AggregateOptions& opts);

}  // namespace symrl
