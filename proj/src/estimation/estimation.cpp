#include "sli/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sli/rng.hpp"

namespace sli {

AccelGrid::AccelGrid(double a_min, double a_max, std::size_t size)
    : a_min_(a_min), a_max_(a_max), size_(size) {
  if (size < 3) throw std::invalid_argument("acceleration grid needs >= 3 points");
  if (!(a_max > a_min) || !std::isfinite(a_min) || !std::isfinite(a_max))
    throw std::invalid_argument("acceleration grid needs a_min < a_max");
}

AccelGrid AccelGrid::centered(double center, double half_width, std::size_t size) {
  return AccelGrid(center - half_width, center + half_width, size);
}

double AccelGrid::value(std::size_t j) const {
  if (j >= size_) throw std::out_of_range("grid index");
  if (j == size_ - 1) return a_max_;
  return a_min_ + static_cast<double>(j) * step();
}

std::vector<double> AccelGrid::values() const {
  std::vector<double> v(size_);
  for (std::size_t j = 0; j < size_; ++j) v[j] = value(j);
  return v;
}

std::size_t AccelGrid::index_of(double a) const {
  const double pos = (a - a_min_) / step();
  const double nearest = std::round(pos);
  if (nearest < 0.0 || nearest > static_cast<double>(size_ - 1) ||
      std::abs(pos - nearest) > 1e-9 * std::max(1.0, std::abs(pos))) {
    std::ostringstream os;
    os << "acceleration " << a << " is not a grid point";
    throw std::invalid_argument(os.str());
  }
  return static_cast<std::size_t>(nearest);
}

void LikelihoodTable::validate(double tolerance) const {
  if (static_cast<std::size_t>(probabilities.rows()) != grid.size())
    throw std::invalid_argument("likelihood rows do not match the grid");
  if (probabilities.cols() < 1) throw std::invalid_argument("likelihood has no outcomes");
  for (Eigen::Index j = 0; j < probabilities.rows(); ++j) {
    if ((probabilities.row(j).array() < 0.0).any())
      throw std::invalid_argument("negative likelihood entry");
    if (std::abs(probabilities.row(j).sum() - 1.0) > tolerance)
      throw std::invalid_argument("likelihood row does not sum to 1");
  }
}

LikelihoodTable build_likelihood(
    const InterferometerSequence& seq, const AccelGrid& grid,
    const LatticeConfig& cfg,
    const std::function<void(std::size_t, std::size_t)>& progress) {
  LikelihoodTable t{grid, Eigen::MatrixXd(grid.size(), cfg.dim())};
  for (std::size_t j = 0; j < grid.size(); ++j) {
    OutputDistribution d;
    try {
      d = run(seq, grid.value(j), cfg);
    } catch (const TruncationError& e) {
      std::ostringstream os;
      os << "likelihood row " << j << ": " << e.what();
      throw TruncationError(os.str(), e.edge_population());
    }
    for (int k = 0; k < cfg.dim(); ++k) t.probabilities(j, k) = d.probabilities[k];
    if (progress) progress(j + 1, grid.size());
  }
  return t;
}

MeasurementRecord sample_measurements(const LikelihoodTable& table, double true_accel,
                                      std::size_t count, std::uint64_t seed) {
  const std::size_t row = table.grid.index_of(true_accel);
  const std::size_t k = table.outcomes();
  std::vector<double> cdf(k);
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    acc += table.probabilities(row, i);
    cdf[i] = acc;
  }
  MeasurementRecord rec;
  rec.seed = seed;
  rec.true_accel = true_accel;
  rec.outcomes.reserve(count);
  Rng rng(seed);
  for (std::size_t m = 0; m < count; ++m) {
    const double u = uniform01(rng) * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    rec.outcomes.push_back(std::min(static_cast<std::size_t>(it - cdf.begin()), k - 1));
  }
  return rec;
}

Posterior uniform_prior(std::size_t size) {
  if (size == 0) throw std::invalid_argument("empty prior");
  return Posterior(size, 1.0 / static_cast<double>(size));
}

PosteriorAccumulator::PosteriorAccumulator(const LikelihoodTable& table,
                                           const Posterior& prior)
    : table_(&table) {
  const std::size_t g = table.grid.size();
  if (prior.size() != g) throw std::invalid_argument("prior does not match the grid");
  double total = 0.0;
  for (double p : prior) {
    if (!(p >= 0.0)) throw std::invalid_argument("prior must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("prior is not normalized");
  log_likelihood_ = table.probabilities.array().log();
  log_post_.resize(g);
  for (std::size_t j = 0; j < g; ++j) log_post_[j] = std::log(prior[j]);
}

void PosteriorAccumulator::update(std::size_t outcome) {
  if (outcome >= table_->outcomes()) throw std::out_of_range("measurement outcome");
  const double* ll = log_likelihood_.data() + outcome * log_likelihood_.rows();
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < log_post_.size(); ++j) {
    log_post_[j] += ll[j];
    peak = std::max(peak, log_post_[j]);
  }
  if (!std::isfinite(peak)) {
    std::ostringstream os;
    os << "posterior vanished on the whole grid after measurement " << count_ + 1;
    throw DegenerateEvidence(os.str());
  }
  // Renormalize: subtract log of the total mass.
  double mass = 0.0;
  for (double v : log_post_) mass += std::exp(v - peak);
  const double shift = peak + std::log(mass);
  for (double& v : log_post_) v -= shift;
  ++count_;
}

Posterior PosteriorAccumulator::posterior() const {
  Posterior p(log_post_.size());
  const double peak = *std::max_element(log_post_.begin(), log_post_.end());
  double total = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    p[j] = std::exp(log_post_[j] - peak);
    total += p[j];
  }
  for (double& v : p) v /= total;
  return p;
}

Posterior bayes_posterior(const LikelihoodTable& table, const MeasurementRecord& record,
                          const Posterior& prior) {
  PosteriorAccumulator acc(table, prior);
  for (std::size_t o : record.outcomes) acc.update(o);
  return acc.posterior();
}

MeanStd posterior_mean_std(const Posterior& posterior, const AccelGrid& grid) {
  if (posterior.size() != grid.size())
    throw std::invalid_argument("posterior does not match the grid");
  double mean = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) mean += posterior[j] * grid.value(j);
  double var = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double d = grid.value(j) - mean;
    var += posterior[j] * d * d;
  }
  return {mean, std::sqrt(var)};
}

double fisher_information(const LikelihoodTable& table, std::size_t j) {
  const std::size_t g = table.grid.size();
  if (j == 0 || j + 1 >= g)
    throw std::invalid_argument("Fisher information needs an interior grid index");
  const double h = table.grid.value(j + 1) - table.grid.value(j - 1);
  double info = 0.0;
  for (Eigen::Index k = 0; k < table.probabilities.cols(); ++k) {
    const double p = table.probabilities(j, k);
    if (p < kFisherProbabilityFloor) continue;
    const double dp = (table.probabilities(j + 1, k) - table.probabilities(j - 1, k)) / h;
    info += dp * dp / p;
  }
  return info;
}

double cr_bound(double fisher, std::size_t n) {
  if (n < 1) throw std::invalid_argument("cr_bound needs N >= 1");
  if (!(fisher >= 0.0)) throw std::invalid_argument("Fisher information must be >= 0");
  if (fisher == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(static_cast<double>(n) * fisher);
}

std::array<double, 2> bragg_baseline(double a, double t, double k_l) {
  if (!(t > 0.0)) throw std::invalid_argument("Bragg time must be positive");
  const double c = std::cos(2.0 * k_l * a * t * t);
  return {0.5 * (1.0 + c), 0.5 * (1.0 - c)};
}

LikelihoodTable bragg_likelihood(const AccelGrid& grid, double t, double k_l) {
  LikelihoodTable table{grid, Eigen::MatrixXd(grid.size(), 2)};
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto p = bragg_baseline(grid.value(j), t, k_l);
    table.probabilities(j, 0) = p[0];
    table.probabilities(j, 1) = p[1];
  }
  return table;
}

double bragg_fisher(double t, double k_l) {
  const double s = 2.0 * k_l * t * t;
  return s * s;
}

std::vector<std::size_t> log_ladder(std::size_t n_max, std::size_t per_decade) {
  if (n_max < 1 || per_decade < 1) throw std::invalid_argument("log_ladder arguments");
  std::vector<std::size_t> out;
  for (std::size_t i = 0;; ++i) {
    const double v = std::pow(10.0, static_cast<double>(i) / static_cast<double>(per_decade));
    const auto n = static_cast<std::size_t>(std::llround(v));
    if (n > n_max) break;
    if (out.empty() || n != out.back()) out.push_back(n);
  }
  if (out.back() != n_max) out.push_back(n_max);
  return out;
}

double loglog_slope(std::span<const std::size_t> n, std::span<const double> sigma,
                    std::size_t n_min) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] < n_min || !(sigma[i] > 0.0)) continue;
    x.push_back(std::log(static_cast<double>(n[i])));
    y.push_back(std::log(sigma[i]));
  }
  return fit_slope(x, y);
}

SigmaCurve sigma_vs_n_experiment(const LikelihoodTable& table, double true_accel,
                                 std::size_t n_max, std::size_t trials,
                                 std::uint64_t seed) {
  if (n_max < 100) throw std::invalid_argument("sigma_vs_n_experiment needs n_max >= 100");
  if (trials < 1) throw std::invalid_argument("sigma_vs_n_experiment needs trials >= 1");
  SigmaCurve curve;
  curve.n = log_ladder(n_max);
  const std::size_t points = curve.n.size();
  std::vector<double> sum(points, 0.0), sum_sq(points, 0.0), err(points, 0.0);

  const std::size_t row = table.grid.index_of(true_accel);
  curve.fisher = (row > 0 && row + 1 < table.grid.size()) ? fisher_information(table, row) : 0.0;

  Rng seeder(seed);
  const Posterior prior = uniform_prior(table.grid.size());
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const MeasurementRecord rec = sample_measurements(table, true_accel, n_max, seeder());
    PosteriorAccumulator acc(table, prior);
    std::size_t next = 0;
    for (std::size_t m = 0; m < rec.outcomes.size() && next < points; ++m) {
      acc.update(rec.outcomes[m]);
      if (acc.count() == curve.n[next]) {
        const MeanStd ms = posterior_mean_std(acc.posterior(), table.grid);
        sum[next] += ms.std;
        sum_sq[next] += ms.std * ms.std;
        err[next] += ms.mean - true_accel;
        ++next;
      }
    }
  }
  const double t = static_cast<double>(trials);
  for (std::size_t i = 0; i < points; ++i) {
    const double mean = sum[i] / t;
    const double var = trials > 1 ? std::max(0.0, (sum_sq[i] - t * mean * mean) / (t - 1.0)) : 0.0;
    curve.sigma.push_back(mean);
    curve.sigma_sem.push_back(std::sqrt(var / t));
    curve.mean_error.push_back(err[i] / t);
    curve.cr.push_back(cr_bound(curve.fisher, curve.n[i]));
  }
  curve.slope = loglog_slope(curve.n, curve.sigma, 100);
  return curve;
}

}  // namespace sli
