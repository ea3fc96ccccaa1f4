#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "symrl/errors.hpp"

namespace symrl {

enum class Activation { Elu, Tanh };

// layer_widths[0] is the input width, the rest are hidden widths; the final
// linear layer maps to output_width.
struct NetArch {
  std::vector<int> layer_widths;
  Activation activation = Activation::Elu;
  int output_width = 0;

  int input_width() const { return layer_widths.front(); }
  int layer_count() const { return static_cast<int>(layer_widths.size()); }
  long param_count() const;
  void validate() const;

  bool operator==(const NetArch&) const = default;
};

struct Layer {
  int in = 0, out = 0;
  std::vector<double> w;  // row-major, out x in
  std::vector<double> b;
};

struct NetParams {
  NetArch arch;
  std::vector<Layer> layers;

  long param_count() const;
  void zero();
  void add_scaled(const NetParams& other, double s);
};

NetParams zeros_like(const NetParams& p);

// Activation record from one forward pass.
struct Tape {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;   // pre-activations per layer
  std::vector<std::vector<double>> post;  // post-activations (hidden layers)
};

NetParams init_params(const NetArch& arch, std::uint64_t rng_seed);

void forward(const NetParams& params, std::span<const double> x,
             std::vector<double>& y, Tape* tape = nullptr);
std::vector<double> forward(const NetParams& params, std::span<const double> x);

// Accumulates parameter gradients into `grads` (shapes must match); writes
// the input gradient when `input_grad` is given.
void backward(const NetParams& params, const Tape& tape,
              std::span<const double> upstream, NetParams& grads,
              std::vector<double>* input_grad = nullptr);

// State-independent diagonal Gaussian head.
struct GaussianHead {
  std::vector<double> mean;
  std::vector<double> log_std;
};

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;

double gaussian_logprob(const GaussianHead& head,
                        std::span<const double> action);

// Adam over arbitrary parameter views; update order is the view order.
struct AdamState {
  std::vector<std::vector<double>> m, v;
  long t = 0;
};

AdamState make_adam_state(const std::vector<std::span<const double>>& params);

void adam_step(const std::vector<std::span<double>>& params,
               const std::vector<std::span<const double>>& grads,
               AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// Global L2 norm across views; scales grads in place when above max_norm.
double clip_grad_norm(const std::vector<std::span<double>>& grads,
                      double max_norm);

std::vector<std::span<double>> param_views(NetParams& p);
std::vector<std::span<const double>> param_views(const NetParams& p);

// Convenience overload matching the per-network update.
void adam_step(NetParams& params, const NetParams& grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

}  // namespace symrl
