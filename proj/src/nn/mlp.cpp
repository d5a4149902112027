#include "sli/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "sli/kernels.hpp"
#include "sli/rng.hpp"

namespace sli {

namespace {

void check_input(const MlpParams& p, std::size_t n) {
  if (n != p.input)
    throw std::invalid_argument("network input dimension mismatch");
}

}  // namespace

MlpParams MlpParams::zeros(std::size_t input, std::size_t hidden,
                           std::size_t output) {
  MlpParams p;
  p.input = input;
  p.hidden = hidden;
  p.output = output;
  p.w1.assign(hidden * input, 0.0);
  p.b1.assign(hidden, 0.0);
  p.w2.assign(output * hidden, 0.0);
  p.b2.assign(output, 0.0);
  return p;
}

bool MlpParams::all_finite() const {
  bool ok = true;
  for_each_array([&](const std::vector<double>& a) {
    for (double v : a) ok = ok && std::isfinite(v);
  });
  return ok;
}

MlpParams init_params(std::size_t input, std::size_t hidden,
                      std::size_t output, std::uint64_t seed) {
  if (input == 0 || hidden == 0 || output == 0)
    throw std::invalid_argument("network dimensions must be >= 1");
  MlpParams p = MlpParams::zeros(input, hidden, output);
  Rng rng(seed);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(input));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& w : p.w1) w = bound1 * (2.0 * uniform01(rng) - 1.0);
  for (double& w : p.w2) w = bound2 * (2.0 * uniform01(rng) - 1.0);
  return p;
}

std::vector<double> forward(const MlpParams& p, std::span<const double> x) {
  check_input(p, x.size());
  const auto& k = kernels::active();
  std::vector<double> h(p.hidden);
  k.gemv(p.w1.data(), p.hidden, p.input, x.data(), p.b1.data(), h.data());
  for (double& v : h) v = v > 0.0 ? v : 0.0;
  std::vector<double> y(p.output);
  k.gemv(p.w2.data(), p.output, p.hidden, h.data(), p.b2.data(), y.data());
  for (double& v : y) v = v > 0.0 ? v : 0.0;
  return y;
}

TdGradient grad_td_loss(const MlpParams& p, std::span<const TdSample> batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const auto& k = kernels::active();
  TdGradient out{MlpParams::zeros(p.input, p.hidden, p.output), 0.0};
  MlpParams& g = out.grad;
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  std::vector<double> z1(p.hidden);
  std::vector<double> h(p.hidden);
  std::vector<double> dz1(p.hidden);
  for (const auto& s : batch) {
    check_input(p, s.state.size());
    if (s.action >= p.output) throw std::invalid_argument("action out of range");
    k.gemv(p.w1.data(), p.hidden, p.input, s.state.data(), p.b1.data(),
           z1.data());
    for (std::size_t j = 0; j < p.hidden; ++j) h[j] = z1[j] > 0.0 ? z1[j] : 0.0;

    const double* w2row = p.w2.data() + s.action * p.hidden;
    const double z2 = k.dot(w2row, h.data(), p.hidden) + p.b2[s.action];
    const double q = z2 > 0.0 ? z2 : 0.0;
    const double residual = q - s.target;
    out.loss += residual * residual * inv_b;
    if (!(z2 > 0.0)) continue;

    const double dz2 = 2.0 * residual * inv_b;
    k.axpy(dz2, h.data(), g.w2.data() + s.action * p.hidden, p.hidden);
    g.b2[s.action] += dz2;
    for (std::size_t j = 0; j < p.hidden; ++j)
      dz1[j] = z1[j] > 0.0 ? dz2 * w2row[j] : 0.0;
    k.ger_acc(1.0, dz1.data(), p.hidden, s.state.data(), p.input, g.w1.data());
    k.axpy(1.0, dz1.data(), g.b1.data(), p.hidden);
  }
  return out;
}

AdamState AdamState::for_params(const MlpParams& params) {
  AdamState s;
  s.m = MlpParams::zeros(params.input, params.hidden, params.output);
  s.v = s.m;
  return s;
}

void adam_step(MlpParams& params, AdamState& state, const MlpParams& grad,
               double learning_rate) {
  if (!params.congruent(grad) || !params.congruent(state.m))
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.step;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  auto update = [&](std::vector<double>& w, std::vector<double>& m,
                    std::vector<double>& v, const std::vector<double>& gr) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * gr[i];
      v[i] = b2 * v[i] + (1.0 - b2) * gr[i] * gr[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= learning_rate * mhat / (std::sqrt(vhat) + state.eps);
    }
  };
  update(params.w1, state.m.w1, state.v.w1, grad.w1);
  update(params.b1, state.m.b1, state.v.b1, grad.b1);
  update(params.w2, state.m.w2, state.v.w2, grad.w2);
  update(params.b2, state.m.b2, state.v.b2, grad.b2);
}

void soft_update(MlpParams& target, const MlpParams& online, double tau) {
  if (!target.congruent(online))
    throw std::invalid_argument("soft_update: shape mismatch");
  if (!(tau >= 0.0 && tau <= 1.0))
    throw std::invalid_argument("soft_update: tau must lie in [0, 1]");
  const auto& k = kernels::active();
  k.blend(tau, target.w1.data(), online.w1.data(), target.w1.size());
  k.blend(tau, target.b1.data(), online.b1.data(), target.b1.size());
  k.blend(tau, target.w2.data(), online.w2.data(), target.w2.size());
  k.blend(tau, target.b2.data(), online.b2.data(), target.b2.size());
}

}  // namespace sli
