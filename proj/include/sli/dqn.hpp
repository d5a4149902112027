#pragma once

// Double deep Q-learning: replay buffer, epsilon-greedy policy, TD targets
// with an online/target network split and the episode loop.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sli/mlp.hpp"
#include "sli/rng.hpp"

namespace sli {

struct Experience {
  std::vector<double> state;
  std::size_t action = 0;
  std::vector<double> next_state;
  double reward = 0.0;
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000);

  void push(Experience e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // i = 0 is the oldest stored experience.
  const Experience& at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot of the oldest item once full
  std::vector<Experience> items_;
};

struct Hyperparameters {
  double gamma = 0.999;
  double tau = 0.999;
  double learning_rate = 0.001;
  std::size_t episodes = 20000;
  double epsilon_decay = 1e-4;
  double epsilon_floor = 0.01;
  std::size_t hidden = 98;
  std::size_t batch = 64;
  std::size_t max_steps = 60;
  double fidelity_threshold = 0.95;
  std::size_t replay_capacity = 100000;

  void validate() const;

  bool operator==(const Hyperparameters&) const = default;
};

Hyperparameters splitter_hyperparameters();
Hyperparameters mirror_hyperparameters();

// max(1 - decay * episode, floor)
double epsilon(std::size_t episode, const Hyperparameters& hyper);

// Greedy argmax of the network output (lowest index on ties) with
// probability 1 - eps, uniform random action otherwise.
std::size_t select_action(const MlpParams& params, std::span<const double> state,
                          double eps, Rng& rng);
std::size_t argmax(std::span<const double> values);

// Distinct buffer positions drawn uniformly. Empty when the buffer holds
// fewer than `batch` items.
std::vector<std::size_t> sample_batch(const ReplayBuffer& buffer,
                                      std::size_t batch, Rng& rng);

// Y_i = r_i + (1 - d_i) gamma Q_target(s'_i, argmax_a Q_online(s'_i, a))
std::vector<double> td_targets(const MlpParams& online, const MlpParams& target,
                               std::span<const Experience* const> batch,
                               double gamma);

struct EpisodeStats {
  std::size_t episode = 0;
  std::size_t steps = 0;
  double fidelity = 0.0;
  double ret = 0.0;
  double epsilon = 0.0;
  double mean_loss = 0.0;  // NaN when no update happened
  std::size_t updates = 0;
};

struct TrainingRecord {
  std::vector<EpisodeStats> episodes;
  double best_fidelity = -1.0;
  std::size_t best_episode = 0;
  std::vector<std::size_t> best_actions;
};

struct TrainResult {
  MlpParams online;
  MlpParams target;
  AdamState adam;
  TrainingRecord record;
};

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Environment requirements:
//   std::size_t observation_size() const;
//   std::size_t action_count() const;
//   std::vector<double> reset();
//   StepResult step(std::size_t action);   // .observation, .reward, .done
//   double fidelity() const;               // figure of merit of the episode
template <class Env>
TrainResult train(Env& env, const Hyperparameters& hyper, std::uint64_t seed,
                  const std::function<void(const EpisodeStats&)>& on_episode = {}) {
  hyper.validate();
  Rng rng(seed);
  TrainResult out;
  out.online = init_params(env.observation_size(), hyper.hidden,
                           env.action_count(), rng());
  out.target = out.online;
  out.adam = AdamState::for_params(out.online);
  ReplayBuffer buffer(hyper.replay_capacity);

  std::vector<const Experience*> picked;
  std::vector<TdSample> samples;
  std::vector<std::size_t> actions;
  for (std::size_t ep = 0; ep < hyper.episodes; ++ep) {
    EpisodeStats stats;
    stats.episode = ep;
    stats.epsilon = epsilon(ep, hyper);
    double loss_sum = 0.0;
    actions.clear();

    std::vector<double> state = env.reset();
    bool done = false;
    while (!done && stats.steps < hyper.max_steps) {
      const std::size_t action = select_action(out.online, state, stats.epsilon, rng);
      auto result = env.step(action);
      actions.push_back(action);
      done = result.done;
      stats.ret += result.reward;
      ++stats.steps;
      buffer.push({state, action, result.observation, result.reward, done});
      state = std::move(result.observation);

      const auto idx = sample_batch(buffer, hyper.batch, rng);
      if (idx.empty()) continue;
      picked.clear();
      for (std::size_t i : idx) picked.push_back(&buffer.at(i));
      const auto targets = td_targets(out.online, out.target, picked, hyper.gamma);
      samples.clear();
      for (std::size_t i = 0; i < picked.size(); ++i)
        samples.push_back({picked[i]->state, picked[i]->action, targets[i]});
      const TdGradient g = grad_td_loss(out.online, samples);
      if (!std::isfinite(g.loss) || !g.grad.all_finite()) {
        std::ostringstream msg;
        msg << "non-finite TD loss at episode " << ep << " step " << stats.steps
            << " (loss " << g.loss << ", adam step " << out.adam.step << ")";
        throw NonFiniteLoss(msg.str());
      }
      adam_step(out.online, out.adam, g.grad, hyper.learning_rate);
      soft_update(out.target, out.online, hyper.tau);
      loss_sum += g.loss;
      ++stats.updates;
    }
    stats.fidelity = env.fidelity();
    stats.mean_loss = stats.updates
                          ? loss_sum / static_cast<double>(stats.updates)
                          : std::numeric_limits<double>::quiet_NaN();
    if (stats.fidelity > out.record.best_fidelity) {
      out.record.best_fidelity = stats.fidelity;
      out.record.best_episode = ep;
      out.record.best_actions = actions;
    }
    out.record.episodes.push_back(stats);
    if (on_episode) on_episode(stats);
  }
  return out;
}

}  // namespace sli
