#include "symrl/net.hpp"

#include <algorithm>
#include <cmath>

#include "symrl/rng.hpp"

namespace symrl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double activate(double z, Activation a) {
  if (a == Activation::Tanh) return std::tanh(z);
  return z > 0.0 ? z : std::expm1(z);
}

double activate_grad(double z, double post, Activation a) {
  if (a == Activation::Tanh) return 1.0 - post * post;
  return z > 0.0 ? 1.0 : post + 1.0;  // elu' = elu + 1 below zero
}

}  // namespace

void NetArch::validate() const {
  if (layer_widths.size() < 2)
    throw DimensionError("arch needs at least one hidden layer");
  for (int w : layer_widths)
    if (w < 1) throw DimensionError("arch widths must be >= 1");
  if (output_width < 1) throw DimensionError("arch output width must be >= 1");
}

long NetArch::param_count() const {
  long n = 0;
  for (size_t l = 1; l < layer_widths.size(); ++l)
    n += static_cast<long>(layer_widths[l - 1]) * layer_widths[l] +
         layer_widths[l];
  n += static_cast<long>(layer_widths.back()) * output_width + output_width;
  return n;
}

long NetParams::param_count() const {
  long n = 0;
  for (const auto& l : layers) n += static_cast<long>(l.w.size()) + l.b.size();
  return n;
}

void NetParams::zero() {
  for (auto& l : layers) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
}

void NetParams::add_scaled(const NetParams& other, double s) {
  for (size_t l = 0; l < layers.size(); ++l) {
    for (size_t k = 0; k < layers[l].w.size(); ++k)
      layers[l].w[k] += s * other.layers[l].w[k];
    for (size_t k = 0; k < layers[l].b.size(); ++k)
      layers[l].b[k] += s * other.layers[l].b[k];
  }
}

NetParams zeros_like(const NetParams& p) {
  NetParams z = p;
  z.zero();
  return z;
}

NetParams init_params(const NetArch& arch, std::uint64_t rng_seed) {
  arch.validate();
  NetParams p;
  p.arch = arch;
  Rng rng(rng_seed, 0xA11);
  std::vector<int> widths = arch.layer_widths;
  widths.push_back(arch.output_width);
  for (size_t l = 1; l < widths.size(); ++l) {
    Layer layer;
    layer.in = widths[l - 1];
    layer.out = widths[l];
    layer.w.resize(static_cast<size_t>(layer.in) * layer.out);
    layer.b.assign(layer.out, 0.0);
    // Scaled Gaussian fan-in init; the output layer gets a smaller scale so
    // initial heads start close to zero.
    double scale = std::sqrt(1.0 / layer.in);
    if (l + 1 == widths.size()) scale *= 0.1;
    for (auto& w : layer.w) w = scale * rng.normal();
    p.layers.push_back(std::move(layer));
  }
  return p;
}

void forward(const NetParams& params, std::span<const double> x,
             std::vector<double>& y, Tape* tape) {
  if (static_cast<int>(x.size()) != params.arch.input_width())
    throw DimensionError("forward: input width " + std::to_string(x.size()) +
                         ", arch expects " +
                         std::to_string(params.arch.input_width()));
  if (tape) {
    tape->input.assign(x.begin(), x.end());
    tape->pre.clear();
    tape->post.clear();
  }
  std::vector<double> cur(x.begin(), x.end());
  const size_t n_layers = params.layers.size();
  for (size_t l = 0; l < n_layers; ++l) {
    const Layer& lay = params.layers[l];
    std::vector<double> z(lay.out);
    for (int o = 0; o < lay.out; ++o) {
      const double* wr = lay.w.data() + static_cast<size_t>(o) * lay.in;
      double acc = lay.b[o];
      for (int i = 0; i < lay.in; ++i) acc += wr[i] * cur[i];
      z[o] = acc;
    }
    const bool is_output = (l + 1 == n_layers);
    if (is_output) {
      if (tape) tape->pre.push_back(z);
      cur = std::move(z);
    } else {
      std::vector<double> a(lay.out);
      for (int o = 0; o < lay.out; ++o)
        a[o] = activate(z[o], params.arch.activation);
      if (tape) {
        tape->pre.push_back(std::move(z));
        tape->post.push_back(a);
      }
      cur = std::move(a);
    }
  }
  y = std::move(cur);
}

std::vector<double> forward(const NetParams& params,
                            std::span<const double> x) {
  std::vector<double> y;
  forward(params, x, y);
  return y;
}

void backward(const NetParams& params, const Tape& tape,
              std::span<const double> upstream, NetParams& grads,
              std::vector<double>* input_grad) {
  const size_t n_layers = params.layers.size();
  if (tape.pre.size() != n_layers)
    throw DimensionError("backward: tape does not match network");
  if (static_cast<int>(upstream.size()) != params.layers.back().out)
    throw DimensionError("backward: upstream width mismatch");

  std::vector<double> delta(upstream.begin(), upstream.end());
  for (size_t l = n_layers; l-- > 0;) {
    const Layer& lay = params.layers[l];
    Layer& g = grads.layers[l];
    const std::vector<double>& in_act =
        (l == 0) ? tape.input : tape.post[l - 1];
    // dL/dW and dL/db
    for (int o = 0; o < lay.out; ++o) {
      double* gw = g.w.data() + static_cast<size_t>(o) * lay.in;
      const double d = delta[o];
      g.b[o] += d;
      for (int i = 0; i < lay.in; ++i) gw[i] += d * in_act[i];
    }
    // propagate to previous layer
    std::vector<double> prev(lay.in, 0.0);
    for (int o = 0; o < lay.out; ++o) {
      const double* wr = lay.w.data() + static_cast<size_t>(o) * lay.in;
      const double d = delta[o];
      for (int i = 0; i < lay.in; ++i) prev[i] += d * wr[i];
    }
    if (l > 0) {
      const auto& z = tape.pre[l - 1];
      const auto& post = tape.post[l - 1];
      for (int i = 0; i < lay.in; ++i)
        prev[i] *= activate_grad(z[i], post[i], params.arch.activation);
    }
    delta = std::move(prev);
  }
  if (input_grad) *input_grad = std::move(delta);
}

double gaussian_logprob(const GaussianHead& head,
                        std::span<const double> action) {
  if (head.mean.size() != action.size() ||
      head.log_std.size() != action.size())
    throw DimensionError("gaussian_logprob: dimension mismatch");
  double lp = 0.0;
  for (size_t d = 0; d < action.size(); ++d) {
    const double ls = head.log_std[d];
    const double inv_sigma = std::exp(-ls);
    const double z = (action[d] - head.mean[d]) * inv_sigma;
    lp += -0.5 * z * z - ls - 0.5 * kLog2Pi;
  }
  return lp;
}

std::vector<std::span<double>> param_views(NetParams& p) {
  std::vector<std::span<double>> v;
  for (auto& l : p.layers) {
    v.emplace_back(l.w);
    v.emplace_back(l.b);
  }
  return v;
}

std::vector<std::span<const double>> param_views(const NetParams& p) {
  std::vector<std::span<const double>> v;
  for (const auto& l : p.layers) {
    v.emplace_back(l.w);
    v.emplace_back(l.b);
  }
  return v;
}

AdamState make_adam_state(const std::vector<std::span<const double>>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.size(), 0.0);
    s.v.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(const std::vector<std::span<double>>& params,
               const std::vector<std::span<const double>>& grads,
               AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw DimensionError("adam_step: view count mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    auto p = params[k];
    auto g = grads[k];
    if (p.size() != g.size() || p.size() != m.size())
      throw DimensionError("adam_step: parameter/gradient shape mismatch");
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

double clip_grad_norm(const std::vector<std::span<double>>& grads,
                      double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (double x : g) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& g : grads)
      for (double& x : g) x *= s;
  }
  return norm;
}

void adam_step(NetParams& params, const NetParams& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  auto pv = param_views(params);
  auto gv = param_views(static_cast<const NetParams&>(grads));
  if (state.m.empty()) state = make_adam_state(gv);
  adam_step(pv, gv, state, lr, beta1, beta2, eps);
}

}  // namespace symrl
