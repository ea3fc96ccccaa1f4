#pragma once

#include <memory>
#include <span>
#include <vector>

#include "symrl/symmetry.hpp"

namespace symrl {

// Running per-dimension statistics for observations. Updates pool every
// sample over all group views {T_j(o)} and then project mean/variance onto
// the symmetric subspace (orbit-averaged scales, group-averaged mean), so
// that normalize(T_j(o)) == T_j(normalize(o)) holds for every view.
class ObsNormalizer {
 public:
  ObsNormalizer() = default;
  explicit ObsNormalizer(std::shared_ptr<const TransformSet> ts);

  void update(const std::vector<std::vector<double>>& raw_obs);
  void update(std::span<const double> flat_batch, int rows);

  void normalize(std::span<const double> in, std::span<double> out) const;
  std::vector<double> normalize(std::span<const double> in) const;

  bool enabled() const { return ts_ != nullptr; }
  int dim() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }

  std::vector<double> state() const;          // serialized [count, mean, var]
  void restore(std::span<const double> state);

 private:
  void project();

  std::shared_ptr<const TransformSet> ts_;
  std::vector<int> orbit_;
  std::vector<double> mean_, var_;
  double count_ = 0.0;
};

// Running mean/std for scalar regression targets (returns).
class ScalarNormalizer {
 public:
  void update(std::span<const double> values);
  double normalize(double x) const;
  double denormalize(double x) const;
  double mean() const { return mean_; }
  double stddev() const;

  std::vector<double> state() const { return {count_, mean_, var_}; }
  void restore(std::span<const double> s);

 private:
  double count_ = 0.0, mean_ = 0.0, var_ = 1.0;
};

}  // namespace symrl
