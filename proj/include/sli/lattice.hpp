#pragma once

// Single atom in a one-dimensional shaken optical lattice,
//
//   H(t) = p^2/2m - (V0/2) cos(2 k_L x + phi(t)),
//
// expanded on the momentum comb {2 n hbar k_L}, n in [-n_max, n_max].
//
// Units: energies in E_r = hbar^2 k_L^2 / 2m, times in 1/omega_r with
// omega_r = E_r / hbar, velocities in v_r = hbar k_L / m and accelerations in
// omega_r v_r. Comb index n corresponds to momentum 2 n hbar k_L. In these
// units the Schroedinger equation reads i d/dt psi = H psi with H in E_r.

#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace sli {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

// Angular frequency of the mirror drive (omega_r): the 4 -> 2 hbar k_L
// kinetic energy difference, 16 - 4 = 12 E_r.
inline constexpr double kMirrorDriveFrequency = 12.0;
inline constexpr double kHalfCycleDuration =
    std::numbers::pi / kMirrorDriveFrequency;

// Momentum of comb index n, in hbar k_L.
constexpr double comb_momentum(int n) { return 2.0 * n; }

struct LatticeConfig {
  double depth = 10.0;  // V0 in E_r
  int n_max = 16;
  int substeps = 32;    // minimum per schedule segment
  double max_substep = 0.05;  // 1/omega_r; long segments get more pieces
  double accel = 0.0;   // omega_r v_r

  // Substeps used for a segment of the given duration:
  // max(substeps, ceil(duration / max_substep)).
  int pieces(double duration) const;
  int dim() const { return 2 * n_max + 1; }
  int index(int n) const { return n + n_max; }
  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  bool operator==(const LatticeConfig&) const = default;
};

struct ConstantPhase {
  double phase = 0.0;  // rad
  bool operator==(const ConstantPhase&) const = default;
};

// phi(tau) = amplitude * sin(12 (start + tau)) for tau in [0, pi/12].
// `start` is the drive-clock time at which the half cycle begins; it is a
// multiple of pi/12 so the drive vanishes at both segment edges.
struct SinusoidHalfCycle {
  double amplitude = 0.0;  // rad
  double start = 0.0;      // 1/omega_r
  bool operator==(const SinusoidHalfCycle&) const = default;
};

class PhaseSegment {
 public:
  using Kind = std::variant<ConstantPhase, SinusoidHalfCycle>;

  static PhaseSegment constant(double phase, double duration);
  static PhaseSegment half_cycle(double amplitude, double start);

  const Kind& kind() const { return kind_; }
  double duration() const { return duration_; }
  bool is_constant() const {
    return std::holds_alternative<ConstantPhase>(kind_);
  }
  // Phase at local time tau measured from the segment start.
  double phase_at(double tau) const;
  PhaseSegment negated() const;

  bool operator==(const PhaseSegment&) const = default;

 private:
  PhaseSegment(Kind kind, double duration) : kind_(kind), duration_(duration) {}

  Kind kind_;
  double duration_;
};

class PhaseSchedule {
 public:
  PhaseSchedule() = default;
  explicit PhaseSchedule(std::vector<PhaseSegment> segments);

  void append(const PhaseSegment& segment);
  void append(const PhaseSchedule& other);

  std::span<const PhaseSegment> segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  bool empty() const { return segments_.empty(); }
  double duration() const { return duration_; }

  // phi(t) for t in [0, duration]; at a segment boundary the later segment
  // wins. Throws std::out_of_range outside the schedule.
  double phase_at(double t) const;

  bool operator==(const PhaseSchedule& other) const {
    return segments_ == other.segments_;
  }

 private:
  std::vector<PhaseSegment> segments_;
  double duration_ = 0.0;
};

PhaseSchedule time_reverse(const PhaseSchedule& schedule, bool negate);

class MomentumState {
 public:
  explicit MomentumState(int n_max);
  MomentumState(int n_max, CVector amplitudes);
  static MomentumState basis(int n_max, int n);

  int n_max() const { return n_max_; }
  int dim() const { return 2 * n_max_ + 1; }

  Complex amplitude(int n) const { return amps_(n + n_max_); }
  double population(int n) const { return std::norm(amps_(n + n_max_)); }
  std::vector<double> populations() const;
  double norm_squared() const { return amps_.squaredNorm(); }
  // max(|c_{-n_max}|^2, |c_{n_max}|^2)
  double edge_population() const;

  // <this|other>
  Complex overlap(const MomentumState& other) const;
  // |<this|other>|^2
  double fidelity(const MomentumState& other) const {
    return std::norm(overlap(other));
  }

  const CVector& amplitudes() const { return amps_; }
  CVector& amplitudes() { return amps_; }

 private:
  int n_max_;
  CVector amps_;
};

class Propagator {
 public:
  explicit Propagator(CMatrix u) : u_(std::move(u)) {}
  static Propagator identity(int dim) {
    return Propagator(CMatrix::Identity(dim, dim));
  }

  const CMatrix& matrix() const { return u_; }
  int dim() const { return static_cast<int>(u_.rows()); }
  MomentumState apply(const MomentumState& state) const;
  // max |U^dagger U - I|
  double unitarity_error() const;

 private:
  CMatrix u_;
};

struct BlochSpectrum {
  Eigen::VectorXd energies;  // ascending, E_r
  Eigen::MatrixXd vectors;   // column b is band b; real at q = 0
  int n_max = 0;

  MomentumState state(int band) const;
};

class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, double edge_population)
      : std::runtime_error(what), edge_population_(edge_population) {}
  double edge_population() const { return edge_population_; }

 private:
  double edge_population_;
};

inline constexpr double kTruncationLimit = 1e-6;

// Comb Hamiltonian in the kinetic-drift gauge: diagonal (2n - a t)^2, coupling
// <n+1|H|n> = -(V0/4) e^{i phi}.
CMatrix build_hamiltonian(double phase, double t, const LatticeConfig& cfg);

// Hermitian tridiagonal generator: real diagonal, A(i+1, i) = lower,
// A(i, i+1) = conj(lower).
struct TridiagonalGenerator {
  Eigen::VectorXd diag;
  Complex lower;
};

// x <- exp(-i h A) x for every column of x, by Chebyshev expansion with
// Bessel coefficients; accurate to roughly 1e-14 relative.
void apply_exponential(const TridiagonalGenerator& gen, double h, CMatrix& x);

// Evolves `state` through `schedule`, starting at absolute time t0 (the
// kinetic-drift diagonal depends on absolute time when accel != 0). Each
// segment is cut into cfg.pieces(duration) substeps, each advanced with a fourth-order
// commutator-free Magnus step (two exponentials at the Gauss-Legendre
// nodes; exact for a constant Hamiltonian). Throws TruncationError if the
// final state has more than kTruncationLimit population on a comb edge.
MomentumState propagate(const MomentumState& state,
                        const PhaseSchedule& schedule,
                        const LatticeConfig& cfg, double t0 = 0.0);

// Same stepping applied to the identity. The truncation check covers input
// columns |n| <= n_max / 2.
Propagator propagator(const PhaseSchedule& schedule, const LatticeConfig& cfg,
                      double t0 = 0.0);

// Lattice-comoving gauge: diagonal (2n)^2 with the control phase replaced by
// phi(t) - 2 a t^2. Populations agree with `propagate`; amplitudes differ by a
// diagonal phase. Cross-check only.
MomentumState propagate_lattice_frame(const MomentumState& state,
                                      const PhaseSchedule& schedule,
                                      const LatticeConfig& cfg,
                                      double t0 = 0.0);

// q = 0 band structure of the static lattice. Requires cfg.accel == 0.
BlochSpectrum bloch_eigensystem(const LatticeConfig& cfg);

}  // namespace sli
