#include "sli/dqn.hpp"

#include <algorithm>

namespace sli {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be >= 1");
}

void ReplayBuffer::push(Experience e) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(e));
    return;
  }
  items_[head_] = std::move(e);
  head_ = (head_ + 1) % capacity_;
}

const Experience& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw std::out_of_range("replay index");
  return items_[(head_ + i) % items_.size()];
}

void Hyperparameters::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(tau >= 0.0 && tau <= 1.0, "tau must lie in [0, 1]");
  require(learning_rate > 0.0 && std::isfinite(learning_rate),
          "learning_rate must be positive");
  require(episodes >= 1, "episodes must be >= 1");
  require(epsilon_decay >= 0.0, "epsilon_decay must be >= 0");
  require(epsilon_floor >= 0.0 && epsilon_floor <= 1.0,
          "epsilon_floor must lie in [0, 1]");
  require(hidden >= 1, "hidden must be >= 1");
  require(batch >= 1, "batch must be >= 1");
  require(max_steps >= 1, "max_steps must be >= 1");
  require(fidelity_threshold > 0.0 && fidelity_threshold < 1.0,
          "fidelity_threshold must lie in (0, 1)");
  require(replay_capacity >= batch, "replay_capacity must be >= batch");
}

Hyperparameters splitter_hyperparameters() { return Hyperparameters{}; }

Hyperparameters mirror_hyperparameters() {
  Hyperparameters h;
  h.gamma = 0.99;
  h.tau = 0.99;
  h.learning_rate = 0.001;
  h.episodes = 8000;
  h.epsilon_decay = 5e-4;
  h.hidden = 128;
  h.batch = 32;
  h.max_steps = 16;
  return h;
}

double epsilon(std::size_t episode, const Hyperparameters& hyper) {
  const double e = 1.0 - hyper.epsilon_decay * static_cast<double>(episode);
  return std::max(e, hyper.epsilon_floor);
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of empty range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::size_t select_action(const MlpParams& params, std::span<const double> state,
                          double eps, Rng& rng) {
  if (uniform01(rng) < eps) return uniform_index(rng, params.output);
  return argmax(forward(params, state));
}

std::vector<std::size_t> sample_batch(const ReplayBuffer& buffer,
                                      std::size_t batch, Rng& rng) {
  const std::size_t n = buffer.size();
  if (batch == 0 || n < batch) return {};
  // Floyd's algorithm: distinct, uniform over all subsets.
  std::vector<std::size_t> out;
  out.reserve(batch);
  for (std::size_t j = n - batch; j < n; ++j) {
    const std::size_t t = uniform_index(rng, j + 1);
    if (std::find(out.begin(), out.end(), t) == out.end())
      out.push_back(t);
    else
      out.push_back(j);
  }
  return out;
}

std::vector<double> td_targets(const MlpParams& online, const MlpParams& target,
                               std::span<const Experience* const> batch,
                               double gamma) {
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Experience& e = *batch[i];
    y[i] = e.reward;
    if (e.done) continue;
    const std::size_t best = argmax(forward(online, e.next_state));
    y[i] += gamma * forward(target, e.next_state)[best];
  }
  return y;
}

}  // namespace sli
