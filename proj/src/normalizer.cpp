#include "symrl/normalizer.hpp"

#include <cmath>

#include "symrl/errors.hpp"

namespace symrl {

namespace {
constexpr double kVarEps = 1e-8;
}

ObsNormalizer::ObsNormalizer(std::shared_ptr<const TransformSet> ts)
    : ts_(std::move(ts)) {
  const int w = ts_->spec.obs_layout.total_width;
  orbit_ = dimension_orbits(ts_->obs, w);
  mean_.assign(w, 0.0);
  var_.assign(w, 1.0);
}

void ObsNormalizer::update(const std::vector<std::vector<double>>& raw_obs) {
  if (raw_obs.empty()) return;
  const int w = dim();
  const int n = ts_->group_size();
  // Batch moments over the pooled view set.
  std::vector<double> bsum(w, 0.0), bsq(w, 0.0);
  std::vector<double> view(w);
  double bn = 0.0;
  for (const auto& o : raw_obs) {
    for (int j = 0; j < n; ++j) {
      ts_->obs[j].apply(o, view);
      for (int d = 0; d < w; ++d) {
        bsum[d] += view[d];
        bsq[d] += view[d] * view[d];
      }
    }
    bn += n;
  }
  // Chan et al. combination of (count_, mean_, var_) with the batch.
  for (int d = 0; d < w; ++d) {
    const double bmean = bsum[d] / bn;
    const double bvar = bsq[d] / bn - bmean * bmean;
    if (count_ <= 0.0) {
      mean_[d] = bmean;
      var_[d] = bvar;
    } else {
      const double delta = bmean - mean_[d];
      const double tot = count_ + bn;
      const double m2 = var_[d] * count_ + bvar * bn +
                        delta * delta * count_ * bn / tot;
      mean_[d] += delta * bn / tot;
      var_[d] = m2 / tot;
    }
  }
  count_ += bn;
  project();
}

void ObsNormalizer::update(std::span<const double> flat_batch, int rows) {
  const int w = dim();
  std::vector<std::vector<double>> obs(rows);
  for (int r = 0; r < rows; ++r)
    obs[r].assign(flat_batch.begin() + static_cast<long>(r) * w,
                  flat_batch.begin() + static_cast<long>(r + 1) * w);
  update(obs);
}

void ObsNormalizer::project() {
  const int w = dim();
  const int n = ts_->group_size();
  // Group-average the mean so it is exactly invariant.
  std::vector<double> acc(w, 0.0), view(w);
  for (int j = 0; j < n; ++j) {
    ts_->obs[j].apply(mean_, view);
    for (int d = 0; d < w; ++d) acc[d] += view[d];
  }
  for (int d = 0; d < w; ++d) mean_[d] = acc[d] / n;
  // Orbit-average the variance so scales commute with the transforms.
  std::vector<double> osum(w, 0.0);
  std::vector<int> ocnt(w, 0);
  for (int d = 0; d < w; ++d) {
    osum[orbit_[d]] += var_[d];
    ocnt[orbit_[d]] += 1;
  }
  for (int d = 0; d < w; ++d) var_[d] = osum[orbit_[d]] / ocnt[orbit_[d]];
}

void ObsNormalizer::normalize(std::span<const double> in,
                              std::span<double> out) const {
  if (static_cast<int>(in.size()) != dim())
    throw DimensionError("normalizer: width mismatch");
  if (count_ <= 0.0) {
    for (size_t d = 0; d < in.size(); ++d) out[d] = in[d];
    return;
  }
  for (size_t d = 0; d < in.size(); ++d)
    out[d] = (in[d] - mean_[d]) / std::sqrt(var_[d] + kVarEps);
}

std::vector<double> ObsNormalizer::normalize(std::span<const double> in) const {
  std::vector<double> out(in.size());
  normalize(in, out);
  return out;
}

std::vector<double> ObsNormalizer::state() const {
  std::vector<double> s;
  s.push_back(count_);
  s.insert(s.end(), mean_.begin(), mean_.end());
  s.insert(s.end(), var_.begin(), var_.end());
  return s;
}

void ObsNormalizer::restore(std::span<const double> state) {
  const int w = dim();
  if (static_cast<int>(state.size()) != 1 + 2 * w)
    throw ConfigError("normalizer state has wrong size");
  count_ = state[0];
  for (int d = 0; d < w; ++d) mean_[d] = state[1 + d];
  for (int d = 0; d < w; ++d) var_[d] = state[1 + w + d];
}

void ScalarNormalizer::update(std::span<const double> values) {
  if (values.empty()) return;
  double bsum = 0.0, bsq = 0.0;
  for (double v : values) {
    bsum += v;
    bsq += v * v;
  }
  const double bn = static_cast<double>(values.size());
  const double bmean = bsum / bn;
  const double bvar = bsq / bn - bmean * bmean;
  if (count_ <= 0.0) {
    mean_ = bmean;
    var_ = bvar;
  } else {
    const double delta = bmean - mean_;
    const double tot = count_ + bn;
    const double m2 = var_ * count_ + bvar * bn + delta * delta * count_ * bn / tot;
    mean_ += delta * bn / tot;
    var_ = m2 / tot;
  }
  count_ += bn;
}

double ScalarNormalizer::stddev() const {
  return std::sqrt(var_ + kVarEps);
}

double ScalarNormalizer::normalize(double x) const {
  if (count_ <= 0.0) return x;
  return (x - mean_) / stddev();
}

double ScalarNormalizer::denormalize(double x) const {
  if (count_ <= 0.0) return x;
  return x * stddev() + mean_;
}

void ScalarNormalizer::restore(std::span<const double> s) {
  if (s.size() != 3) throw ConfigError("scalar normalizer state has wrong size");
  count_ = s[0];
  mean_ = s[1];
  var_ = s[2];
}

}  // namespace symrl
