#include <doctest.h>

#include <array>
#include <cmath>

#include "sli/dqn.hpp"
#include "sli/tasks.hpp"

using namespace sli;

namespace {

// Four-state chain. Action 0 exits with reward kExit[s]; action 1 advances
// to s + 1 with no reward, and from the last state ends the episode with
// reward 1. Episodes start in a uniformly random state.
constexpr std::array<double, 4> kExit = {0.5, 0.85, 0.7, 0.6};
constexpr double kFinal = 1.0;

class Chain {
 public:
  explicit Chain(std::uint64_t seed) : rng_(seed) {}

  std::size_t observation_size() const { return 4; }
  std::size_t action_count() const { return 2; }

  std::vector<double> reset() {
    s_ = uniform_index(rng_, 4);
    last_ = 0.0;
    return observe();
  }
  StepResult step(std::size_t a) {
    if (a == 0) {
      last_ = kExit[s_];
      return {observe(), last_, true};
    }
    if (s_ == 3) {
      last_ = kFinal;
      return {observe(), last_, true};
    }
    ++s_;
    return {observe(), 0.0, false};
  }
  double fidelity() const { return last_; }

  static std::vector<double> one_hot(std::size_t s) {
    std::vector<double> v(4, 0.0);
    v[s] = 1.0;
    return v;
  }

 private:
  std::vector<double> observe() const { return one_hot(s_); }

  Rng rng_;
  std::size_t s_ = 0;
  double last_ = 0.0;
};

// Every action ends the episode: reward kOneStep[s][a].
constexpr double kOneStep[4][2] = {{0.2, 0.9}, {0.6, 0.3}, {1.4, 0.5}, {0.1, 0.8}};

class OneStep {
 public:
  explicit OneStep(std::uint64_t seed) : rng_(seed) {}

  std::size_t observation_size() const { return 4; }
  std::size_t action_count() const { return 2; }
  std::vector<double> reset() {
    s_ = uniform_index(rng_, 4);
    return Chain::one_hot(s_);
  }
  StepResult step(std::size_t a) {
    last_ = kOneStep[s_][a];
    return {Chain::one_hot(s_), last_, true};
  }
  double fidelity() const { return last_; }

 private:
  Rng rng_;
  std::size_t s_ = 0;
  double last_ = 0.0;
};

struct Values {
  std::array<std::array<double, 2>, 4> q;
  std::array<double, 4> v;
  std::array<std::size_t, 4> policy;
};

Values value_iteration(double gamma) {
  Values out{};
  std::array<double, 4> v{};
  for (int it = 0; it < 1000; ++it) {
    for (int s = 3; s >= 0; --s) {
      out.q[s][0] = kExit[s];
      out.q[s][1] = s == 3 ? kFinal : gamma * v[s + 1];
      v[s] = std::max(out.q[s][0], out.q[s][1]);
    }
  }
  out.v = v;
  for (int s = 0; s < 4; ++s) out.policy[s] = out.q[s][1] > out.q[s][0] ? 1 : 0;
  return out;
}

Hyperparameters chain_hyper(double gamma) {
  Hyperparameters h;
  h.gamma = gamma;
  h.tau = 0.9;
  h.learning_rate = 0.005;
  h.episodes = 3000;
  h.epsilon_decay = 1.0 / 1500;
  h.epsilon_floor = 0.1;
  h.hidden = 32;
  h.batch = 32;
  h.max_steps = 10;
  h.replay_capacity = 5000;
  return h;
}

}  // namespace

TEST_CASE("epsilon schedule") {
  Hyperparameters h;
  CHECK(epsilon(0, h) == 1.0);
  CHECK(epsilon(5000, h) == doctest::Approx(0.5));
  CHECK(epsilon(20000, h) == 0.01);
  CHECK(epsilon(9900, h) == doctest::Approx(0.01));
}

TEST_CASE("hyperparameter defaults and validation") {
  const Hyperparameters s = splitter_hyperparameters();
  CHECK(s.gamma == 0.999);
  CHECK(s.tau == 0.999);
  CHECK(s.hidden == 98);
  CHECK(s.batch == 64);
  CHECK(s.episodes == 20000);
  const Hyperparameters m = mirror_hyperparameters();
  CHECK(m.gamma == 0.99);
  CHECK(m.hidden == 128);
  CHECK(m.batch == 32);
  CHECK(m.episodes == 8000);
  CHECK(m.epsilon_decay == 5e-4);
  Hyperparameters bad = s;
  bad.gamma = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = s;
  bad.batch = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("greedy action and tie break") {
  CHECK(argmax(std::vector<double>{0, 3, 1}) == 1);
  CHECK(argmax(std::vector<double>{2, 2, 2}) == 0);
  MlpParams p = MlpParams::zeros(2, 3, 3);
  p.b2 = {0, 3, 1};
  Rng rng(1);
  CHECK(select_action(p, std::vector<double>{0.1, 0.2}, 0.0, rng) == 1);
  p.b2 = {1, 1, 1};
  CHECK(select_action(p, std::vector<double>{0.1, 0.2}, 0.0, rng) == 0);
}

TEST_CASE("epsilon = 1 draws actions uniformly") {
  const MlpParams p = init_params(7, 8, 5, 1);
  Rng rng(99);
  const int draws = 100000;
  std::array<int, 5> counts{};
  for (int i = 0; i < draws; ++i) ++counts[select_action(p, std::vector<double>(7, 0.3), 1.0, rng)];
  const double sigma = std::sqrt(draws * 0.2 * 0.8);
  for (int c : counts) CHECK(std::abs(c - draws * 0.2) < 3 * sigma);
}

TEST_CASE("replay buffer keeps insertion order under eviction") {
  ReplayBuffer b(3);
  for (int i = 0; i < 5; ++i) b.push({{double(i)}, 0, {0.0}, 0.0, false});
  CHECK(b.size() == 3);
  CHECK(b.at(0).state[0] == 2);
  CHECK(b.at(1).state[0] == 3);
  CHECK(b.at(2).state[0] == 4);
  CHECK_THROWS(b.at(3));
}

TEST_CASE("batch sampling") {
  ReplayBuffer b(100);
  Rng rng(5);
  for (int i = 0; i < 7; ++i) b.push({{double(i)}, 0, {0.0}, 0.0, false});
  CHECK(sample_batch(b, 8, rng).empty());
  b.push({{7.0}, 0, {0.0}, 0.0, false});
  auto all = sample_batch(b, 8, rng);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});

  for (int i = 8; i < 32; ++i) b.push({{double(i)}, 0, {0.0}, 0.0, false});
  const int draws = 10000;
  std::vector<int> hits(32, 0);
  for (int d = 0; d < draws; ++d) {
    auto idx = sample_batch(b, 8, rng);
    std::vector<std::size_t> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    for (std::size_t i : idx) ++hits[i];
  }
  const double p = 8.0 / 32.0;
  const double sigma = std::sqrt(draws * p * (1 - p));
  for (int h : hits) CHECK(std::abs(h - draws * p) < 3 * sigma);
}

TEST_CASE("TD targets") {
  MlpParams online = MlpParams::zeros(2, 3, 2);
  MlpParams target = MlpParams::zeros(2, 3, 2);
  online.b2 = {1, 0};   // argmax 0
  target.b2 = {10, 50};
  const Experience terminal{{0, 0}, 0, {0, 0}, 19.0, true};
  const Experience live{{0, 0}, 1, {0, 0}, 0.0, false};
  std::vector<const Experience*> batch{&terminal, &live};
  const auto y = td_targets(online, target, batch, 0.999);
  CHECK(y[0] == 19.0);
  CHECK(y[1] == doctest::Approx(9.99));
  // Identical networks: standard Q-learning target max_a Q(s', a).
  const auto y2 = td_targets(target, target, batch, 0.5);
  CHECK(y2[1] == doctest::Approx(25.0));
}

TEST_CASE("double DQN recovers the value-iteration policy on a chain") {
  const Values vi = value_iteration(0.9);
  CHECK(vi.policy == std::array<std::size_t, 4>{1, 0, 1, 1});
  Chain env(3);
  const TrainResult r = train(env, chain_hyper(0.9), 17);
  double worst = 0.0;
  for (std::size_t s = 0; s < 4; ++s) {
    const auto q = forward(r.online, Chain::one_hot(s));
    CHECK(argmax(q) == vi.policy[s]);
    worst = std::max(worst, std::abs(q[argmax(q)] - vi.v[s]));
  }
  CHECK(worst < 0.1);
}

TEST_CASE("gamma = 0 learns immediate rewards") {
  OneStep env(4);
  const TrainResult r = train(env, chain_hyper(0.0), 23);
  for (std::size_t s = 0; s < 4; ++s) {
    const auto q = forward(r.online, Chain::one_hot(s));
    for (std::size_t a = 0; a < 2; ++a) CHECK(std::abs(q[a] - kOneStep[s][a]) < 0.05);
  }
}

TEST_CASE("training is deterministic and tracks the best episode") {
  Hyperparameters h = chain_hyper(0.9);
  h.episodes = 300;
  Chain a(1), b(1);
  const TrainResult ra = train(a, h, 5);
  const TrainResult rb = train(b, h, 5);
  CHECK(ra.online == rb.online);
  REQUIRE(ra.record.episodes.size() == 300);
  double best = -1;
  for (std::size_t i = 0; i < 300; ++i) {
    CHECK(ra.record.episodes[i].fidelity == rb.record.episodes[i].fidelity);
    best = std::max(best, ra.record.episodes[i].fidelity);
  }
  CHECK(ra.record.best_fidelity == best);
  CHECK(ra.record.episodes[ra.record.best_episode].fidelity == best);
}
