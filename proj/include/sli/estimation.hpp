#pragma once

// Bayesian acceleration estimation from momentum measurements, Fisher
// information and Cramer-Rao bounds, and the analytic Bragg baseline.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sli/interferometer.hpp"

namespace sli {

class AccelGrid {
 public:
  AccelGrid(double a_min, double a_max, std::size_t size);
  static AccelGrid centered(double center, double half_width, std::size_t size);

  std::size_t size() const { return size_; }
  double min() const { return a_min_; }
  double max() const { return a_max_; }
  double step() const { return (a_max_ - a_min_) / static_cast<double>(size_ - 1); }
  double value(std::size_t j) const;
  std::vector<double> values() const;
  // Index of the grid point equal to a (within 1e-9 of the step); throws
  // std::invalid_argument when a is off-grid.
  std::size_t index_of(double a) const;

  bool operator==(const AccelGrid&) const = default;

 private:
  double a_min_;
  double a_max_;
  std::size_t size_;
};

// Row j holds P(outcome | a_j); outcome k is comb index k - n_max for
// interferometer tables.
struct LikelihoodTable {
  AccelGrid grid;
  Eigen::MatrixXd probabilities;  // G x outcomes

  std::size_t outcomes() const { return static_cast<std::size_t>(probabilities.cols()); }
  void validate(double tolerance = 1e-9) const;
};

LikelihoodTable build_likelihood(
    const InterferometerSequence& seq, const AccelGrid& grid,
    const LatticeConfig& cfg,
    const std::function<void(std::size_t done, std::size_t total)>& progress = {});

struct MeasurementRecord {
  std::vector<std::size_t> outcomes;
  std::uint64_t seed = 0;
  double true_accel = 0.0;
};

MeasurementRecord sample_measurements(const LikelihoodTable& table, double true_accel,
                                      std::size_t count, std::uint64_t seed);

using Posterior = std::vector<double>;

Posterior uniform_prior(std::size_t size);

class DegenerateEvidence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sequential Bayes update in log space with renormalization after every
// measurement.
class PosteriorAccumulator {
 public:
  PosteriorAccumulator(const LikelihoodTable& table, const Posterior& prior);

  void update(std::size_t outcome);
  Posterior posterior() const;
  std::size_t count() const { return count_; }

 private:
  const LikelihoodTable* table_;
  Eigen::MatrixXd log_likelihood_;  // G x outcomes, one contiguous column per outcome
  std::vector<double> log_post_;
  std::size_t count_ = 0;
};

Posterior bayes_posterior(const LikelihoodTable& table, const MeasurementRecord& record,
                          const Posterior& prior);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd posterior_mean_std(const Posterior& posterior, const AccelGrid& grid);

inline constexpr double kFisherProbabilityFloor = 1e-12;

// sum_p (dP/da)^2 / P at interior grid index j, central differences.
double fisher_information(const LikelihoodTable& table, std::size_t j);

// 1 / sqrt(N I); +infinity when I == 0.
double cr_bound(double fisher, std::size_t n);

// (P+, P-) = ((1 + cos(2 k_L a T^2)) / 2, (1 - cos(2 k_L a T^2)) / 2).
// In recoil units (lengths in v_r / omega_r) the lattice wavenumber is
// k_L = 2, kBraggRecoilWavenumber.
std::array<double, 2> bragg_baseline(double a, double t, double k_l);
inline constexpr double kBraggRecoilWavenumber = 2.0;
LikelihoodTable bragg_likelihood(const AccelGrid& grid, double t, double k_l);
// (2 k_L T^2)^2
double bragg_fisher(double t, double k_l);

struct SigmaCurve {
  std::vector<std::size_t> n;
  std::vector<double> sigma;      // mean posterior std over trials
  std::vector<double> sigma_sem;  // standard error of that mean
  std::vector<double> mean_error; // mean of (posterior mean - true a)
  std::vector<double> cr;         // Cramer-Rao bound at the true a
  double fisher = 0.0;
  double slope = 0.0;             // log-log slope of sigma over n >= 100
};

// Ladder of ~4 points per decade from 1 to n_max (inclusive).
std::vector<std::size_t> log_ladder(std::size_t n_max, std::size_t per_decade = 4);

// For each trial draws n_max measurements at the true a and records the
// posterior std at every ladder point (records are nested prefixes).
SigmaCurve sigma_vs_n_experiment(const LikelihoodTable& table, double true_accel,
                                 std::size_t n_max, std::size_t trials,
                                 std::uint64_t seed);

double loglog_slope(std::span<const std::size_t> n, std::span<const double> sigma,
                    std::size_t n_min);

}  // namespace sli
