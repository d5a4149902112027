#pragma once

// Two-layer ReLU network used as the Q-function approximator:
//
//   h = ReLU(W1 x + b1),  y = ReLU(W2 h + b2).
//
// The output ReLU is intentional; returns in this project are nonnegative.

#include <cstdint>
#include <span>
#include <vector>

namespace sli {

struct MlpParams {
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::size_t output = 0;
  std::vector<double> w1;  // hidden x input, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // output x hidden, row-major
  std::vector<double> b2;  // output

  static MlpParams zeros(std::size_t input, std::size_t hidden,
                         std::size_t output);

  bool congruent(const MlpParams& other) const {
    return input == other.input && hidden == other.hidden &&
           output == other.output;
  }
  std::size_t parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
  }
  bool all_finite() const;

  // Visits the four arrays in storage order (w1, b1, w2, b2).
  template <class F>
  void for_each_array(F&& f) {
    f(w1);
    f(b1);
    f(w2);
    f(b2);
  }
  template <class F>
  void for_each_array(F&& f) const {
    f(w1);
    f(b1);
    f(w2);
    f(b2);
  }

  bool operator==(const MlpParams&) const = default;
};

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero. Deterministic in
// the seed.
MlpParams init_params(std::size_t input, std::size_t hidden,
                      std::size_t output, std::uint64_t seed);

// Throws std::invalid_argument on a dimension mismatch.
std::vector<double> forward(const MlpParams& params, std::span<const double> x);

struct TdSample {
  std::span<const double> state;
  std::size_t action;
  double target;
};

struct TdGradient {
  MlpParams grad;
  double loss = 0.0;
};

// Gradient of (1/B) sum_i (Q(s_i, a_i) - Y_i)^2. Only the selected output
// contributes per sample; the ReLU derivative at 0 is taken as 0.
TdGradient grad_td_loss(const MlpParams& params, std::span<const TdSample> batch);

struct AdamState {
  MlpParams m;
  MlpParams v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_params(const MlpParams& params);
  bool operator==(const AdamState&) const = default;
};

// Bias-corrected Adam update in place; increments state.step.
void adam_step(MlpParams& params, AdamState& state, const MlpParams& grad,
               double learning_rate);

// target <- tau * target + (1 - tau) * online
void soft_update(MlpParams& target, const MlpParams& online, double tau);

}  // namespace sli
