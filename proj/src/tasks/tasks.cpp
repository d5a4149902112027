#include "sli/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sli/kernels.hpp"

namespace sli {

namespace {

void apply_unitary(const CMatrix& u, const Complex* in, Complex* out) {
  kernels::active().cgemv(u.data(), static_cast<std::size_t>(u.rows()), in, out);
}

void check_edges(const CVector& amps, const char* where) {
  const double edge =
      std::max(std::norm(amps(0)), std::norm(amps(amps.size() - 1)));
  if (edge > kTruncationLimit) {
    std::ostringstream os;
    os << where << ": comb edge population " << edge << " exceeds "
       << kTruncationLimit;
    throw TruncationError(os.str(), edge);
  }
}

}  // namespace

double fidelity_reward(double fidelity) {
  const double f = std::min(fidelity, 1.0 - 1e-12);
  return f / (1.0 - f);
}

// ---------------------------------------------------------------------------
// Splitter

void SplitterConfig::validate() const {
  lattice.validate();
  if (lattice.accel != 0.0)
    throw std::invalid_argument("splitter task requires zero acceleration");
  if (!(action_duration > 0.0))
    throw std::invalid_argument("action_duration must be positive");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("threshold must lie in (0, 1)");
  if (target_band < 0 || target_band >= lattice.dim())
    throw std::invalid_argument("target_band out of range");
}

double splitter_fidelity(const MomentumState& state, const MomentumState& target) {
  return target.fidelity(state);
}

std::vector<double> population_observation(const MomentumState& state) {
  std::vector<double> obs;
  obs.reserve(2 * kObservedHalfWidth + 1);
  for (int n = -kObservedHalfWidth; n <= kObservedHalfWidth; ++n)
    obs.push_back(state.population(n));
  return obs;
}

SplitterTask::SplitterTask(const SplitterConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      initial_(cfg.lattice.n_max),
      target_(cfg.lattice.n_max),
      state_(cfg.lattice.n_max) {
  const BlochSpectrum spec = bloch_eigensystem(cfg_.lattice);
  initial_ = spec.state(0);
  target_ = spec.state(cfg_.target_band);
  for (double phase : kSplitterPhases) {
    PhaseSchedule one({PhaseSegment::constant(phase, cfg_.action_duration)});
    action_unitaries_.push_back(propagator(one, cfg_.lattice).matrix());
  }
  scratch_.resize(cfg_.lattice.dim());
  state_ = initial_;
}

std::vector<double> SplitterTask::reset() {
  state_ = initial_;
  steps_ = 0;
  done_ = false;
  return population_observation(state_);
}

StepResult SplitterTask::step(std::size_t action) {
  if (done_) throw EpisodeFinished();
  if (action >= action_count()) throw std::invalid_argument("action out of range");
  apply_unitary(action_unitaries_[action], state_.amplitudes().data(),
                scratch_.data());
  state_.amplitudes().swap(scratch_);
  ++steps_;

  StepResult r;
  r.observation = population_observation(state_);
  const double f = fidelity();
  done_ = steps_ >= cfg_.max_steps || f > cfg_.threshold;
  r.done = done_;
  if (done_) {
    check_edges(state_.amplitudes(), "splitter episode");
    r.reward = fidelity_reward(f);
  }
  return r;
}

double SplitterTask::fidelity() const { return splitter_fidelity(state_, target_); }

PhaseSchedule SplitterTask::schedule(std::span<const std::size_t> actions) const {
  PhaseSchedule s;
  for (std::size_t a : actions) {
    if (a >= action_count()) throw std::invalid_argument("action out of range");
    s.append(PhaseSegment::constant(kSplitterPhases[a], cfg_.action_duration));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Channel fidelity

CMatrix SubspaceTarget::projector() const {
  const int d = 2 * n_max + 1;
  CMatrix p = CMatrix::Zero(d, d);
  p(n_max + comb, n_max + comb) = 1.0;
  p(n_max - comb, n_max - comb) = 1.0;
  return p;
}

CMatrix SubspaceTarget::target_map() const {
  const int d = 2 * n_max + 1;
  CMatrix x = CMatrix::Zero(d, d);
  x(n_max + comb, n_max - comb) = 1.0;
  x(n_max - comb, n_max + comb) = 1.0;
  return x;
}

double channel_fidelity(const CMatrix& u, const SubspaceTarget& target) {
  const int d = 2 * target.n_max + 1;
  if (u.rows() != d || u.cols() != d)
    throw std::invalid_argument("channel_fidelity: dimension mismatch");
  const CMatrix p = target.projector();
  const CMatrix m = p * target.target_map().adjoint() * u * p;
  const double tr_mm = (m * m.adjoint()).trace().real();
  const double tr = std::norm(m.trace());
  return (tr_mm + tr) / 6.0;
}

double channel_fidelity_block(const Eigen::Matrix2cd& block) {
  Eigen::Matrix2cd swap;
  swap << 0.0, 1.0, 1.0, 0.0;
  const Eigen::Matrix2cd m = swap * block;
  return (m.squaredNorm() + std::norm(m.trace())) / 6.0;
}

Eigen::Matrix2cd subspace_block(const CMatrix& u, const SubspaceTarget& target) {
  const int hi = target.n_max + target.comb;
  const int lo = target.n_max - target.comb;
  Eigen::Matrix2cd b;
  b << u(hi, hi), u(hi, lo), u(lo, hi), u(lo, lo);
  return b;
}

double swap_distance(const Eigen::Matrix2cd& block) {
  Eigen::Matrix2cd swap;
  swap << 0.0, 1.0, 1.0, 0.0;
  const Complex overlap = (swap.adjoint() * block).trace();
  const Complex phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap)
                                                : Complex(1.0, 0.0);
  const Eigen::Matrix2cd diff = block - phase * swap;
  Eigen::JacobiSVD<Eigen::Matrix2cd> svd(diff);
  return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------
// Mirror

void MirrorConfig::validate() const {
  lattice.validate();
  if (lattice.accel != 0.0)
    throw std::invalid_argument("mirror task requires zero acceleration");
  if (max_half_cycles < 1)
    throw std::invalid_argument("max_half_cycles must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("threshold must lie in (0, 1)");
}

MirrorTask::MirrorTask(const MirrorConfig& cfg) : cfg_((cfg.validate(), cfg)) {
  for (double amp : kMirrorAmplitudes) {
    std::array<CMatrix, 2> pair;
    for (int parity = 0; parity < 2; ++parity) {
      PhaseSchedule one({PhaseSegment::half_cycle(amp, parity * kHalfCycleDuration)});
      pair[parity] = propagator(one, cfg_.lattice).matrix();
    }
    half_cycle_unitaries_.push_back(std::move(pair));
  }
  const int d = cfg_.lattice.dim();
  cols_ = CMatrix::Zero(d, 2);
  scratch_ = CMatrix::Zero(d, 2);
  reset();
  done_ = true;
}

std::vector<double> MirrorTask::observe() const {
  std::vector<double> obs;
  obs.reserve(observation_size());
  for (int c = 0; c < 2; ++c)
    for (int n = -kObservedHalfWidth; n <= kObservedHalfWidth; ++n)
      obs.push_back(std::norm(cols_(cfg_.lattice.index(n), c)));
  return obs;
}

std::vector<double> MirrorTask::reset() {
  cols_.setZero();
  cols_(cfg_.lattice.index(kTargetComb), 0) = 1.0;
  cols_(cfg_.lattice.index(-kTargetComb), 1) = 1.0;
  steps_ = 0;
  done_ = false;
  return observe();
}

StepResult MirrorTask::step(std::size_t action) {
  if (done_) throw EpisodeFinished();
  if (action >= action_count()) throw std::invalid_argument("action out of range");
  const CMatrix& u = half_cycle_unitaries_[action][steps_ % 2];
  for (int c = 0; c < 2; ++c)
    apply_unitary(u, cols_.col(c).data(), scratch_.col(c).data());
  cols_.swap(scratch_);
  ++steps_;

  StepResult r;
  r.observation = observe();
  const double f = fidelity();
  done_ = steps_ >= cfg_.max_half_cycles || f > cfg_.threshold;
  r.done = done_;
  if (done_) {
    for (int c = 0; c < 2; ++c) check_edges(cols_.col(c), "mirror episode");
    r.reward = fidelity_reward(f);
  }
  return r;
}

Eigen::Matrix2cd MirrorTask::block() const {
  const int hi = cfg_.lattice.index(kTargetComb);
  const int lo = cfg_.lattice.index(-kTargetComb);
  Eigen::Matrix2cd b;
  b << cols_(hi, 0), cols_(hi, 1), cols_(lo, 0), cols_(lo, 1);
  return b;
}

double MirrorTask::fidelity() const { return channel_fidelity_block(block()); }

PhaseSchedule MirrorTask::schedule(std::span<const std::size_t> actions) const {
  std::vector<double> amps;
  for (std::size_t a : actions) {
    if (a >= action_count()) throw std::invalid_argument("action out of range");
    amps.push_back(kMirrorAmplitudes[a]);
  }
  return mirror_schedule(amps);
}

PhaseSchedule mirror_schedule(std::span<const double> amplitudes) {
  PhaseSchedule s;
  for (std::size_t k = 0; k < amplitudes.size(); ++k)
    s.append(PhaseSegment::half_cycle(amplitudes[k],
                                      static_cast<double>(k) * kHalfCycleDuration));
  return s;
}

std::vector<MirrorScanPoint> baseline_mirror_scan(const LatticeConfig& lattice,
                                                  std::span<const double> amplitudes,
                                                  std::size_t max_half_cycles) {
  lattice.validate();
  const SubspaceTarget target{lattice.n_max, kTargetComb};
  std::vector<MirrorScanPoint> out;
  for (double amp : amplitudes) {
    std::array<CMatrix, 2> half;
    for (int parity = 0; parity < 2; ++parity) {
      PhaseSchedule one({PhaseSegment::half_cycle(amp, parity * kHalfCycleDuration)});
      half[parity] = propagator(one, lattice).matrix();
    }
    CMatrix u = CMatrix::Identity(lattice.dim(), lattice.dim());
    for (std::size_t k = 0; k < max_half_cycles; ++k) {
      u = half[k % 2] * u;
      out.push_back({amp, k + 1, static_cast<double>(k + 1) * kHalfCycleDuration,
                     channel_fidelity_block(subspace_block(u, target))});
    }
  }
  return out;
}

}  // namespace sli
