#include <doctest.h>

#include <cmath>
#include <limits>

#include "sli/estimation.hpp"

using namespace sli;

namespace {

LikelihoodTable three_point_table() {
  LikelihoodTable t{AccelGrid(-1.0, 1.0, 3), Eigen::MatrixXd(3, 2)};
  t.probabilities << 0.5, 0.5, 0.8, 0.2, 0.2, 0.8;
  return t;
}

struct Arm {
  double x = 0.0;
  double v = 0.0;
};

void drift(Arm& arm, double accel, double duration, int steps) {
  // Velocity Verlet; exact for a constant force.
  const double h = duration / steps;
  for (int i = 0; i < steps; ++i) {
    arm.x += arm.v * h + 0.5 * accel * h * h;
    arm.v += accel * h;
  }
}

}  // namespace

TEST_CASE("acceleration grid") {
  const AccelGrid g = AccelGrid::centered(-3e-4, 3e-4, 1201);
  CHECK(g.min() == doctest::Approx(-6e-4));
  CHECK(g.max() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(g.step() == doctest::Approx(5e-7));
  CHECK(g.index_of(-3e-4) == 600);
  CHECK(g.value(600) == doctest::Approx(-3e-4));
  CHECK(g.values().size() == 1201);
  CHECK_THROWS_AS(g.index_of(-3.0001e-4), std::invalid_argument);
  CHECK_THROWS_AS(g.index_of(1e-3), std::invalid_argument);
  CHECK_THROWS_AS(AccelGrid(0.0, 1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(AccelGrid(1.0, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(g.value(1201), std::out_of_range);
}

TEST_CASE("likelihood validation") {
  LikelihoodTable t = three_point_table();
  CHECK_NOTHROW(t.validate());
  t.probabilities(1, 0) = 0.7;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t.probabilities(1, 0) = -0.1;
  t.probabilities(1, 1) = 1.1;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

TEST_CASE("Bayes update by hand") {
  const LikelihoodTable t = three_point_table();
  const Posterior prior = uniform_prior(3);
  MeasurementRecord rec;
  rec.outcomes = {0};
  Posterior p = bayes_posterior(t, rec, prior);
  CHECK(p[0] == doctest::Approx(0.5 / 1.5));
  CHECK(p[1] == doctest::Approx(0.8 / 1.5));
  CHECK(p[2] == doctest::Approx(0.2 / 1.5));
  rec.outcomes = {0, 1};
  p = bayes_posterior(t, rec, prior);
  CHECK(p[0] == doctest::Approx(0.25 / 0.57));
  CHECK(p[1] == doctest::Approx(0.16 / 0.57));
  CHECK(p[2] == doctest::Approx(0.16 / 0.57));

  // A non-uniform prior multiplies through.
  const Posterior skew = {0.5, 0.25, 0.25};
  rec.outcomes = {1};
  p = bayes_posterior(t, rec, skew);
  CHECK(p[0] == doctest::Approx(0.25 / 0.5));
  CHECK(p[2] == doctest::Approx(0.2 / 0.5));

  CHECK_THROWS_AS(bayes_posterior(t, rec, Posterior{0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(bayes_posterior(t, rec, Posterior{0.5, 0.5, 0.5}), std::invalid_argument);
  rec.outcomes = {2};
  CHECK_THROWS_AS(bayes_posterior(t, rec, prior), std::out_of_range);
}

TEST_CASE("long records stay finite and match the count form") {
  const LikelihoodTable t = three_point_table();
  MeasurementRecord rec;
  for (int i = 0; i < 3000; ++i) rec.outcomes.push_back(i % 3 == 0 ? 1 : 0);
  const Posterior p = bayes_posterior(t, rec, uniform_prior(3));
  // log posterior = 2000 log P(0|a) + 1000 log P(1|a) + const
  double logp[3];
  for (int j = 0; j < 3; ++j)
    logp[j] = 2000 * std::log(t.probabilities(j, 0)) + 1000 * std::log(t.probabilities(j, 1));
  const double peak = std::max({logp[0], logp[1], logp[2]});
  double z = 0.0;
  for (double l : logp) z += std::exp(l - peak);
  for (int j = 0; j < 3; ++j) {
    CHECK(std::isfinite(p[j]));
    CHECK(p[j] == doctest::Approx(std::exp(logp[j] - peak) / z));
  }
}

TEST_CASE("zero likelihood everywhere is reported") {
  LikelihoodTable t = three_point_table();
  t.probabilities.col(0).setConstant(1.0);
  t.probabilities.col(1).setZero();
  PosteriorAccumulator acc(t, uniform_prior(3));
  acc.update(0);
  CHECK_THROWS_AS(acc.update(1), DegenerateEvidence);
}

TEST_CASE("posterior moments") {
  // Uniform posterior over G points spanning [-w, w]: var = w^2 (G+1) / (3 (G-1)).
  const AccelGrid g(-2.0, 2.0, 41);
  const MeanStd flat = posterior_mean_std(uniform_prior(41), g);
  CHECK(std::abs(flat.mean) < 1e-15);
  CHECK(flat.std == doctest::Approx(std::sqrt(4.0 * 42.0 / (3.0 * 40.0))));
  Posterior spike(41, 0.0);
  spike[30] = 1.0;
  const MeanStd s = posterior_mean_std(spike, g);
  CHECK(s.mean == doctest::Approx(1.0));
  CHECK(s.std == 0.0);
}

TEST_CASE("measurement sampling follows the true row") {
  LikelihoodTable t{AccelGrid(0.0, 2.0, 3), Eigen::MatrixXd(3, 4)};
  t.probabilities << 1, 0, 0, 0, 0.1, 0.2, 0.3, 0.4, 0, 0, 0, 1;
  const std::size_t draws = 100000;
  const MeasurementRecord rec = sample_measurements(t, 1.0, draws, 42);
  CHECK(rec.seed == 42);
  CHECK(rec.true_accel == 1.0);
  std::array<double, 4> counts{};
  for (std::size_t o : rec.outcomes) counts.at(o) += 1;
  for (int k = 0; k < 4; ++k) {
    const double p = t.probabilities(1, k);
    CHECK(std::abs(counts[k] - draws * p) < 4 * std::sqrt(draws * p * (1 - p)));
  }
  CHECK(sample_measurements(t, 1.0, 50, 7).outcomes == sample_measurements(t, 1.0, 50, 7).outcomes);
  for (std::size_t o : sample_measurements(t, 2.0, 100, 1).outcomes) CHECK(o == 3);
  CHECK_THROWS_AS(sample_measurements(t, 0.5, 10, 1), std::invalid_argument);
}

TEST_CASE("Cramer-Rao bound") {
  CHECK(cr_bound(4.0, 25) == doctest::Approx(0.1));
  CHECK(std::isinf(cr_bound(0.0, 10)));
  CHECK_THROWS_AS(cr_bound(1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(cr_bound(-1.0, 3), std::invalid_argument);
}

TEST_CASE("Bragg recoil-unit wavenumber and phase") {
  // Rb-87 on a 780 nm lattice in SI.
  const double hbar = 1.054571817e-34;
  const double m = 1.443160648e-25;
  const double k_l = 2 * 3.141592653589793 / 780e-9;
  const double v_r = hbar * k_l / m;
  const double w_r = hbar * k_l * k_l / (2 * m);
  const double length = v_r / w_r;
  CHECK(k_l * length == doctest::Approx(kBraggRecoilWavenumber).epsilon(1e-14));

  // Mach-Zehnder with 2 hbar k_L kicks at 0, T (reversal) and 2T.
  const double a_rec = 3e-4;
  const double t_rec = 20.0;
  const double a = a_rec * v_r * w_r;
  const double t = t_rec / w_r;
  const double kick = 2 * hbar * k_l / m;
  const double k_eff = 2 * k_l;
  Arm upper{0.0, kick}, lower{0.0, 0.0};
  drift(upper, a, t, 1000);
  drift(lower, a, t, 1000);
  const double mid = upper.x + lower.x;
  upper.v -= kick;
  lower.v += kick;
  drift(upper, a, t, 1000);
  drift(lower, a, t, 1000);
  CHECK(std::abs(upper.x - lower.x) < 1e-9 * std::abs(mid));
  const double phase = k_eff * (0.0 - mid + upper.x);
  const auto p = bragg_baseline(a_rec, t_rec, kBraggRecoilWavenumber);
  CHECK(p[1] == doctest::Approx(0.5 * (1 - std::cos(phase))).epsilon(1e-7));
  CHECK(p[0] + p[1] == doctest::Approx(1.0));
  CHECK_THROWS_AS(bragg_baseline(0.0, 0.0, 2.0), std::invalid_argument);
}

TEST_CASE("Bragg Fisher information: numeric matches analytic") {
  const double t = 20.0;
  const double k = kBraggRecoilWavenumber;
  const double s = 2 * k * t * t;
  for (double phase : {0.4, 1.0, 2.5}) {
    const LikelihoodTable table = bragg_likelihood(AccelGrid::centered(phase / s, 1e-9, 3), t, k);
    CHECK_NOTHROW(table.validate());
    CHECK(fisher_information(table, 1) == doctest::Approx(bragg_fisher(t, k)).epsilon(1e-6));
  }
  CHECK(bragg_fisher(t, k) == doctest::Approx(1600.0 * 1600.0));
  const LikelihoodTable table = bragg_likelihood(AccelGrid(0.0, 1.0, 3), t, k);
  CHECK_THROWS_AS(fisher_information(table, 0), std::invalid_argument);
  CHECK_THROWS_AS(fisher_information(table, 2), std::invalid_argument);
}

TEST_CASE("log ladder and slope") {
  const auto l = log_ladder(10000);
  CHECK(l.front() == 1);
  CHECK(l.back() == 10000);
  CHECK(l.size() == 17);
  for (std::size_t i = 1; i < l.size(); ++i) CHECK(l[i] > l[i - 1]);
  CHECK(log_ladder(150).back() == 150);
  CHECK_THROWS_AS(log_ladder(0), std::invalid_argument);

  std::vector<double> sigma;
  for (std::size_t n : l) sigma.push_back(3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(loglog_slope(l, sigma, 100) == doctest::Approx(-0.5));
  sigma[0] = 100.0;  // below n_min, ignored
  CHECK(loglog_slope(l, sigma, 100) == doctest::Approx(-0.5));
}

TEST_CASE("sigma vs N on the Bragg model") {
  const double t = 20.0;
  const double a0 = 1.0 / 1600.0;
  const LikelihoodTable table =
      bragg_likelihood(AccelGrid::centered(a0, 3e-4, 601), t, kBraggRecoilWavenumber);
  const SigmaCurve c = sigma_vs_n_experiment(table, table.grid.value(300), 3000, 30, 9);
  CHECK(c.fisher == doctest::Approx(bragg_fisher(t, kBraggRecoilWavenumber)).epsilon(1e-3));
  CHECK(c.slope == doctest::Approx(-0.5).epsilon(0.2));
  for (std::size_t i = 0; i < c.n.size(); ++i) {
    if (c.n[i] < 100) continue;
    // Constant information: the posterior width tracks the bound.
    CHECK(c.sigma[i] == doctest::Approx(c.cr[i]).epsilon(0.02));
  }
  const SigmaCurve again = sigma_vs_n_experiment(table, table.grid.value(300), 3000, 30, 9);
  CHECK(again.sigma == c.sigma);
  CHECK_THROWS_AS(sigma_vs_n_experiment(table, table.grid.value(300), 50, 3, 1), std::invalid_argument);
}
