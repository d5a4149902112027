#include "sli/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sli {

void LatticeConfig::validate() const {
  if (!(depth > 0.0) || !std::isfinite(depth))
    throw std::invalid_argument("lattice depth must be positive and finite");
  if (n_max < 8) throw std::invalid_argument("n_max must be >= 8");
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  if (!(max_substep > 0.0))
    throw std::invalid_argument("max_substep must be positive");
  if (!std::isfinite(accel))
    throw std::invalid_argument("acceleration must be finite");
}

int LatticeConfig::pieces(double duration) const {
  const double by_length = std::ceil(duration / max_substep - 1e-9);
  return std::max(substeps, static_cast<int>(by_length));
}

// ---------------------------------------------------------------------------
// Schedules

PhaseSegment PhaseSegment::constant(double phase, double duration) {
  if (!std::isfinite(phase))
    throw std::invalid_argument("segment phase must be finite");
  if (!(duration > 0.0) || !std::isfinite(duration))
    throw std::invalid_argument("segment duration must be positive");
  return PhaseSegment(ConstantPhase{phase}, duration);
}

PhaseSegment PhaseSegment::half_cycle(double amplitude, double start) {
  if (!std::isfinite(amplitude) || !std::isfinite(start))
    throw std::invalid_argument("half-cycle parameters must be finite");
  return PhaseSegment(SinusoidHalfCycle{amplitude, start}, kHalfCycleDuration);
}

double PhaseSegment::phase_at(double tau) const {
  if (const auto* c = std::get_if<ConstantPhase>(&kind_)) return c->phase;
  const auto& s = std::get<SinusoidHalfCycle>(kind_);
  return s.amplitude * std::sin(kMirrorDriveFrequency * (s.start + tau));
}

PhaseSegment PhaseSegment::negated() const {
  if (const auto* c = std::get_if<ConstantPhase>(&kind_))
    return PhaseSegment(ConstantPhase{-c->phase}, duration_);
  auto s = std::get<SinusoidHalfCycle>(kind_);
  s.amplitude = -s.amplitude;
  return PhaseSegment(s, duration_);
}

PhaseSchedule::PhaseSchedule(std::vector<PhaseSegment> segments)
    : segments_(std::move(segments)) {
  for (const auto& s : segments_) duration_ += s.duration();
}

void PhaseSchedule::append(const PhaseSegment& segment) {
  segments_.push_back(segment);
  duration_ += segment.duration();
}

void PhaseSchedule::append(const PhaseSchedule& other) {
  for (const auto& s : other.segments_) append(s);
}

double PhaseSchedule::phase_at(double t) const {
  if (segments_.empty() || t < 0.0 || t > duration_)
    throw std::out_of_range("time outside schedule");
  double start = 0.0;
  for (const auto& s : segments_) {
    if (t < start + s.duration()) return s.phase_at(t - start);
    start += s.duration();
  }
  const auto& last = segments_.back();
  return last.phase_at(last.duration());
}

PhaseSchedule time_reverse(const PhaseSchedule& schedule, bool negate) {
  std::vector<PhaseSegment> out(schedule.segments().rbegin(),
                                schedule.segments().rend());
  if (negate)
    for (auto& s : out) s = s.negated();
  return PhaseSchedule(std::move(out));
}

// ---------------------------------------------------------------------------
// States and propagators

MomentumState::MomentumState(int n_max)
    : n_max_(n_max), amps_(CVector::Zero(2 * n_max + 1)) {}

MomentumState::MomentumState(int n_max, CVector amplitudes)
    : n_max_(n_max), amps_(std::move(amplitudes)) {
  if (amps_.size() != 2 * n_max + 1)
    throw std::invalid_argument("amplitude vector does not match n_max");
}

MomentumState MomentumState::basis(int n_max, int n) {
  if (std::abs(n) > n_max) throw std::invalid_argument("comb index out of range");
  MomentumState s(n_max);
  s.amps_(n + n_max) = 1.0;
  return s;
}

std::vector<double> MomentumState::populations() const {
  std::vector<double> p(amps_.size());
  for (Eigen::Index i = 0; i < amps_.size(); ++i) p[i] = std::norm(amps_(i));
  return p;
}

double MomentumState::edge_population() const {
  return std::max(std::norm(amps_(0)), std::norm(amps_(amps_.size() - 1)));
}

Complex MomentumState::overlap(const MomentumState& other) const {
  if (other.dim() != dim()) throw std::invalid_argument("state dimension mismatch");
  return amps_.dot(other.amps_);  // conjugates the left operand
}

MomentumState Propagator::apply(const MomentumState& state) const {
  if (state.dim() != dim()) throw std::invalid_argument("state dimension mismatch");
  return MomentumState(state.n_max(), u_ * state.amplitudes());
}

double Propagator::unitarity_error() const {
  const CMatrix d = u_.adjoint() * u_ - CMatrix::Identity(dim(), dim());
  return d.cwiseAbs().maxCoeff();
}

MomentumState BlochSpectrum::state(int band) const {
  if (band < 0 || band >= vectors.cols())
    throw std::invalid_argument("band index out of range");
  return MomentumState(n_max, vectors.col(band).cast<Complex>());
}

// ---------------------------------------------------------------------------
// Hamiltonian and stepping

CMatrix build_hamiltonian(double phase, double t, const LatticeConfig& cfg) {
  if (!std::isfinite(phase) || !std::isfinite(t))
    throw std::invalid_argument("build_hamiltonian: phase and time must be finite");
  const int d = cfg.dim();
  CMatrix h = CMatrix::Zero(d, d);
  const Complex coupling = -0.25 * cfg.depth * std::polar(1.0, phase);
  for (int i = 0; i < d; ++i) {
    const double k = comb_momentum(i - cfg.n_max) - cfg.accel * t;
    h(i, i) = k * k;
    if (i + 1 < d) {
      h(i + 1, i) = coupling;
      h(i, i + 1) = std::conj(coupling);
    }
  }
  return h;
}

namespace {

// Fourth-order commutator-free Magnus scheme: over [t, t + h] with
// Gauss-Legendre nodes t1 < t2,
//   U = exp(-i h (a1 H1 + a2 H2)) exp(-i h (a2 H1 + a1 H2)),
// the right factor acting first. Exact when H is constant.
constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kNode1 = 0.5 - kSqrt3 / 6.0;
constexpr double kNode2 = 0.5 + kSqrt3 / 6.0;
constexpr double kWeightSmall = (3.0 - 2.0 * kSqrt3) / 12.0;
constexpr double kWeightLarge = (3.0 + 2.0 * kSqrt3) / 12.0;

enum class Gauge { kKineticDrift, kLatticeFrame };

struct NodeHamiltonian {
  Eigen::VectorXd diag;
  Complex lower;
};

NodeHamiltonian node_hamiltonian(const LatticeConfig& cfg, Gauge gauge,
                                 double phase, double t) {
  NodeHamiltonian h;
  h.diag.resize(cfg.dim());
  const double drift = gauge == Gauge::kKineticDrift ? cfg.accel * t : 0.0;
  if (gauge == Gauge::kLatticeFrame) phase -= 2.0 * cfg.accel * t * t;
  for (int i = 0; i < cfg.dim(); ++i) {
    const double k = comb_momentum(i - cfg.n_max) - drift;
    h.diag(i) = k * k;
  }
  h.lower = -0.25 * cfg.depth * std::polar(1.0, phase);
  return h;
}

Eigen::VectorXd kinetic_diagonal(const LatticeConfig& cfg) {
  Eigen::VectorXd d(cfg.dim());
  for (int i = 0; i < cfg.dim(); ++i) {
    const double k = comb_momentum(i - cfg.n_max);
    d(i) = k * k;
  }
  return d;
}

TridiagonalGenerator combine(const NodeHamiltonian& first, double w_first,
                             const NodeHamiltonian& second, double w_second) {
  return {w_first * first.diag + w_second * second.diag,
          w_first * first.lower + w_second * second.lower};
}

template <class Sink>
void for_each_substep(const PhaseSchedule& schedule, const LatticeConfig& cfg,
                      double t0, Gauge gauge, Sink&& sink) {
  cfg.validate();
  double seg_start = t0;
  for (const auto& seg : schedule.segments()) {
    const int pieces = cfg.pieces(seg.duration());
    const double dt = seg.duration() / pieces;
    for (int k = 0; k < pieces; ++k) {
      const double tau1 = (k + kNode1) * dt;
      const double tau2 = (k + kNode2) * dt;
      const auto h1 = node_hamiltonian(cfg, gauge, seg.phase_at(tau1), seg_start + tau1);
      const auto h2 = node_hamiltonian(cfg, gauge, seg.phase_at(tau2), seg_start + tau2);
      sink(combine(h1, kWeightLarge, h2, kWeightSmall), dt);
      sink(combine(h1, kWeightSmall, h2, kWeightLarge), dt);
    }
    seg_start += seg.duration();
  }
}

void check_truncation(double edge, const char* where) {
  if (edge > kTruncationLimit) {
    std::ostringstream os;
    os << where << ": comb edge population " << edge << " exceeds "
       << kTruncationLimit << "; increase n_max";
    throw TruncationError(os.str(), edge);
  }
}

MomentumState evolve_state(const MomentumState& state,
                           const PhaseSchedule& schedule,
                           const LatticeConfig& cfg, double t0, Gauge gauge) {
  if (state.dim() != cfg.dim())
    throw std::invalid_argument("state dimension does not match lattice config");
  CMatrix psi = state.amplitudes();
  for_each_substep(schedule, cfg, t0, gauge,
                   [&](const TridiagonalGenerator& g, double h) {
                     apply_exponential(g, h, psi);
                   });
  MomentumState out(cfg.n_max, psi.col(0));
  check_truncation(out.edge_population(), "propagate");
  return out;
}

// Bessel functions J_0..J_kmax at x by downward (Miller) recurrence,
// normalized with J_0 + 2 sum J_2k = 1.
std::vector<double> bessel_j_sequence(int kmax, double x) {
  std::vector<double> j(kmax + 1, 0.0);
  if (x < 1e-300) {
    j[0] = 1.0;
    return j;
  }
  const int start = kmax + 32 + static_cast<int>(std::sqrt(40.0 * (kmax + 1)));
  double next = 0.0;
  double cur = 1e-300;
  double norm = 0.0;
  for (int k = start; k >= 1; --k) {
    const double prev = 2.0 * k / x * cur - next;
    next = cur;
    cur = prev;
    if (k - 1 <= kmax) j[k - 1] = cur;
    if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * cur;
    if (std::abs(cur) > 1e250) {
      for (auto& v : j) v *= 1e-250;
      next *= 1e-250;
      cur *= 1e-250;
      norm *= 1e-250;
    }
  }
  norm += cur;  // J_0
  for (auto& v : j) v /= norm;
  return j;
}

}  // namespace

void apply_exponential(const TridiagonalGenerator& gen, double h, CMatrix& x) {
  const Eigen::Index d = gen.diag.size();
  if (x.rows() != d) throw std::invalid_argument("apply_exponential: dimension mismatch");
  const double coupling = std::abs(gen.lower);
  const double lo = gen.diag.minCoeff() - 2.0 * coupling;
  const double hi = gen.diag.maxCoeff() + 2.0 * coupling;
  const double center = 0.5 * (hi + lo);
  const double half = std::max(0.5 * (hi - lo), 1e-12);
  const double r = h * half;

  const int kmax = static_cast<int>(std::ceil(r + 12.0 * std::cbrt(r) + 20.0));
  const auto bessel = bessel_j_sequence(kmax, r);
  int last = kmax;
  while (last > r + 1.0 && std::abs(bessel[last]) < 1e-17) --last;

  thread_local std::vector<double> sdiag;
  thread_local std::vector<Complex> buf;
  sdiag.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) sdiag[i] = (gen.diag(i) - center) / half;
  const Complex lower = gen.lower / half;
  const Complex upper = std::conj(lower);

  const Eigen::Index cols = x.cols();
  buf.resize(4 * d);
  Complex* prev = buf.data();
  Complex* cur = prev + d;
  Complex* next = cur + d;
  Complex* acc = next + d;

  // out = scale * A~ in - sub
  auto step = [&](const Complex* in, Complex* out, double scale,
                  const Complex* sub) {
    for (Eigen::Index i = 0; i < d; ++i) {
      Complex v = sdiag[i] * in[i];
      if (i > 0) v += lower * in[i - 1];
      if (i + 1 < d) v += upper * in[i + 1];
      out[i] = sub ? scale * v - sub[i] : scale * v;
    }
  };

  const Complex global = std::polar(1.0, -h * center);
  for (Eigen::Index c = 0; c < cols; ++c) {
    Complex* col = x.col(c).data();
    std::copy(col, col + d, prev);
    step(prev, cur, 1.0, nullptr);
    const Complex c1 = 2.0 * bessel[1] * Complex(0.0, -1.0);
    for (Eigen::Index i = 0; i < d; ++i) acc[i] = bessel[0] * prev[i] + c1 * cur[i];
    Complex phase(0.0, -1.0);
    Complex* p = prev;
    Complex* q = cur;
    Complex* n = next;
    for (int k = 2; k <= last; ++k) {
      step(q, n, 2.0, p);
      phase *= Complex(0.0, -1.0);
      const Complex ck = 2.0 * bessel[k] * phase;
      for (Eigen::Index i = 0; i < d; ++i) acc[i] += ck * n[i];
      Complex* t = p;
      p = q;
      q = n;
      n = t;
    }
    for (Eigen::Index i = 0; i < d; ++i) col[i] = global * acc[i];
  }
}

MomentumState propagate(const MomentumState& state,
                        const PhaseSchedule& schedule,
                        const LatticeConfig& cfg, double t0) {
  return evolve_state(state, schedule, cfg, t0, Gauge::kKineticDrift);
}

MomentumState propagate_lattice_frame(const MomentumState& state,
                                      const PhaseSchedule& schedule,
                                      const LatticeConfig& cfg, double t0) {
  return evolve_state(state, schedule, cfg, t0, Gauge::kLatticeFrame);
}

Propagator propagator(const PhaseSchedule& schedule, const LatticeConfig& cfg,
                      double t0) {
  const int d = cfg.dim();
  CMatrix u = CMatrix::Identity(d, d);
  for_each_substep(schedule, cfg, t0, Gauge::kKineticDrift,
                   [&](const TridiagonalGenerator& g, double h) {
                     apply_exponential(g, h, u);
                   });
  double edge = 0.0;
  for (int j = cfg.n_max - cfg.n_max / 2; j <= cfg.n_max + cfg.n_max / 2; ++j)
    edge = std::max({edge, std::norm(u(0, j)), std::norm(u(d - 1, j))});
  check_truncation(edge, "propagator");
  return Propagator(std::move(u));
}

BlochSpectrum bloch_eigensystem(const LatticeConfig& cfg) {
  cfg.validate();
  if (cfg.accel != 0.0)
    throw std::invalid_argument("bloch_eigensystem requires zero acceleration");
  const int d = cfg.dim();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(kinetic_diagonal(cfg),
                                Eigen::VectorXd::Constant(d - 1, -0.25 * cfg.depth),
                                Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("Bloch diagonalization failed");

  BlochSpectrum out;
  out.n_max = cfg.n_max;
  out.energies = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  // Sign convention: the largest-magnitude component (lowest index among
  // near-ties) is positive.
  for (int b = 0; b < d; ++b) {
    auto col = out.vectors.col(b);
    const double peak = col.cwiseAbs().maxCoeff();
    for (int i = 0; i < d; ++i) {
      if (std::abs(col(i)) >= peak * (1.0 - 1e-9)) {
        if (col(i) < 0.0) col = -col;
        break;
      }
    }
  }
  return out;
}

}  // namespace sli
