#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "sli/lattice.hpp"

using namespace sli;
using std::numbers::pi;

namespace {

// Reference values from tests/oracles/lattice_oracles.py (numpy eigh and
// scipy DOP853 at rtol 1e-12), V0 = 10, n_max = 16.
constexpr double kBandEnergies[5] = {-2.153078342042, 3.492474366739, 5.613041084867,
                                     16.194837346916, 16.227316187361};
constexpr double kConstantPopsA0[7] = {1.310904257754e-03, 5.154067172860e-02,
                                       4.874109921316e-02, 6.271151751299e-01,
                                       2.120168477242e-01, 4.956402756471e-02,
                                       9.358068152289e-03};
constexpr double kConstantPopsA001[7] = {1.208940722409e-03, 5.590169582481e-02,
                                         5.077722456938e-02, 6.181350700517e-01,
                                         2.150192505349e-01, 4.908087139797e-02,
                                         9.509853529581e-03};
constexpr double kHalfCyclePops[7] = {1.198613827445e-05, 1.029649073392e-03,
                                      2.218712531614e-02, 6.479141569176e-02,
                                      1.239540987607e-01, 7.865955945265e-01,
                                      1.419285904202e-03};

PhaseSchedule oracle_schedule() {
  return PhaseSchedule({PhaseSegment::constant(-pi / 2, 0.25), PhaseSegment::constant(pi / 2, 0.5),
                        PhaseSegment::constant(-pi / 4, 0.3), PhaseSegment::constant(0.0, 0.7)});
}

// Fine-step RK4 on the comb with the Hamiltonian assembled here, stepping
// each segment separately so no step straddles a phase jump.
CVector rk4(CVector psi, const PhaseSchedule& s, double accel, int n_max, double depth,
            int steps_per_segment) {
  const int d = 2 * n_max + 1;
  double t0 = 0.0;
  for (const auto& seg : s.segments()) {
    auto apply_h = [&](double tau, const CVector& v) {
      const Complex c = -depth / 4.0 * std::exp(Complex(0.0, seg.phase_at(tau)));
      CVector out(d);
      for (int i = 0; i < d; ++i) {
        const double k = 2.0 * (i - n_max) - accel * (t0 + tau);
        out(i) = k * k * v(i);
        if (i > 0) out(i) += c * v(i - 1);
        if (i + 1 < d) out(i) += std::conj(c) * v(i + 1);
      }
      return CVector(Complex(0.0, -1.0) * out);
    };
    const double h = seg.duration() / steps_per_segment;
    for (int k = 0; k < steps_per_segment; ++k) {
      const double tau = k * h;
      const CVector k1 = apply_h(tau, psi);
      const CVector k2 = apply_h(tau + h / 2, psi + h / 2 * k1);
      const CVector k3 = apply_h(tau + h / 2, psi + h / 2 * k2);
      const CVector k4 = apply_h(tau + h, psi + h * k3);
      psi += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    t0 += seg.duration();
  }
  return psi;
}

}  // namespace

TEST_CASE("config validation and substep count") {
  LatticeConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.dim() == 33);
  CHECK(cfg.pieces(0.25) == 32);
  CHECK(cfg.pieces(10.0) == 200);
  cfg.depth = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = LatticeConfig{};
  cfg.n_max = 4;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("schedule bookkeeping") {
  const PhaseSchedule s = oracle_schedule();
  CHECK(s.duration() == doctest::Approx(1.75));
  CHECK(s.phase_at(0.0) == -pi / 2);
  CHECK(s.phase_at(0.25) == pi / 2);  // later segment wins at the boundary
  CHECK(s.phase_at(1.75) == 0.0);
  CHECK_THROWS_AS(s.phase_at(1.8), std::out_of_range);
  const PhaseSchedule r = time_reverse(s, true);
  CHECK(r.size() == 4);
  CHECK(r.phase_at(0.0) == 0.0);
  CHECK(r.phase_at(1.7) == pi / 2);
  CHECK(time_reverse(time_reverse(s, true), true) == s);
  CHECK_THROWS_AS(PhaseSegment::constant(0.0, 0.0), std::invalid_argument);
  const auto hc = PhaseSegment::half_cycle(0.8, kHalfCycleDuration);
  CHECK(hc.duration() == doctest::Approx(pi / 12));
  CHECK(std::abs(hc.phase_at(0.0)) < 1e-12);
  CHECK(hc.phase_at(pi / 24) == doctest::Approx(-0.8));
}

TEST_CASE("Hamiltonian is Hermitian and tridiagonal") {
  LatticeConfig cfg;
  cfg.accel = 0.02;
  const CMatrix h = build_hamiltonian(0.7, 3.0, cfg);
  CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(h(cfg.index(1), cfg.index(1)).real() == doctest::Approx(std::pow(2.0 - 0.06, 2)));
  CHECK(std::abs(h(cfg.index(1), cfg.index(0)) - (-2.5 * std::exp(Complex(0, 0.7)))) < 1e-15);
  CHECK(std::abs(h(cfg.index(3), cfg.index(0))) == 0.0);
}

TEST_CASE("Bloch spectrum matches dense diagonalization") {
  const BlochSpectrum b = bloch_eigensystem(LatticeConfig{});
  for (int k = 0; k < 5; ++k) CHECK(b.energies(k) == doctest::Approx(kBandEnergies[k]).epsilon(1e-10));
  // Band 3 is odd under n -> -n and concentrated on +-4 hbar k_L.
  const MomentumState s3 = b.state(3);
  CHECK(std::abs(s3.amplitude(2) + s3.amplitude(-2)) < 1e-10);
  CHECK(s3.population(2) + s3.population(-2) == doctest::Approx(0.9449848319).epsilon(1e-9));
  // Ground band is even.
  const MomentumState s0 = b.state(0);
  for (int n = 1; n <= 16; ++n) CHECK(std::abs(s0.amplitude(n) - s0.amplitude(-n)) < 1e-12);
  LatticeConfig moving;
  moving.accel = 0.1;
  CHECK_THROWS(bloch_eigensystem(moving));
}

TEST_CASE("dense exponential oracle") {
  LatticeConfig cfg;
  cfg.accel = 0.05;
  const CMatrix h = build_hamiltonian(1.1, 2.0, cfg);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  for (double step : {0.01, 0.05, 0.3}) {
    const CMatrix exact = es.eigenvectors() *
                          (Complex(0, -step) * es.eigenvalues().cast<Complex>()).array().exp().matrix().asDiagonal() *
                          es.eigenvectors().adjoint();
    TridiagonalGenerator gen;
    gen.diag = h.diagonal().real();
    gen.lower = h(1, 0);
    CMatrix x = CMatrix::Identity(33, 33);
    apply_exponential(gen, step, x);
    CHECK((x - exact).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("propagation matches the adaptive ODE reference") {
  LatticeConfig cfg;
  const MomentumState ground = bloch_eigensystem(cfg).state(0);
  const MomentumState a0 = propagate(ground, oracle_schedule(), cfg);
  cfg.accel = 0.01;
  const MomentumState a1 = propagate(ground, oracle_schedule(), cfg);
  for (int n = -3; n <= 3; ++n) {
    CHECK(a0.population(n) == doctest::Approx(kConstantPopsA0[n + 3]).epsilon(1e-8));
    CHECK(a1.population(n) == doctest::Approx(kConstantPopsA001[n + 3]).epsilon(1e-8));
  }

  LatticeConfig rest;
  const PhaseSchedule two = PhaseSchedule(
      {PhaseSegment::half_cycle(0.8, 0.0), PhaseSegment::half_cycle(0.8, kHalfCycleDuration)});
  const MomentumState h = propagate(MomentumState::basis(16, 2), two, rest);
  for (int n = -3; n <= 3; ++n)
    CHECK(h.population(n) == doctest::Approx(kHalfCyclePops[n + 3]).epsilon(1e-8));
}

TEST_CASE("propagation matches fine-step RK4") {
  const MomentumState ground = bloch_eigensystem(LatticeConfig{}).state(0);
  PhaseSchedule s = oracle_schedule();
  s.append(PhaseSegment::half_cycle(1.0, 0.0));
  s.append(PhaseSegment::half_cycle(0.6, kHalfCycleDuration));
  for (double accel : {0.0, 0.03}) {
    const CVector ref = rk4(ground.amplitudes(), s, accel, 16, 10.0, 4000);
    LatticeConfig cfg;
    cfg.accel = accel;
    // Default stepping: fourth-order error of the drive half cycles.
    CHECK((propagate(ground, s, cfg).amplitudes() - ref).cwiseAbs().maxCoeff() < 5e-8);
    cfg.substeps = 256;
    CHECK((propagate(ground, s, cfg).amplitudes() - ref).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("unitarity and norm conservation") {
  LatticeConfig cfg;
  cfg.accel = 0.01;
  const Propagator u = propagator(oracle_schedule(), cfg);
  CHECK(u.unitarity_error() <= 1e-9);
  PhaseSchedule mixed = oracle_schedule();
  mixed.append(PhaseSegment::half_cycle(1.2, 0.0));
  mixed.append(PhaseSegment::constant(0.0, 10.0));
  const MomentumState out = propagate(bloch_eigensystem(LatticeConfig{}).state(0), mixed, cfg);
  CHECK(std::abs(out.norm_squared() - 1.0) <= 1e-10);
}

TEST_CASE("Bloch states are stationary") {
  LatticeConfig cfg;
  const BlochSpectrum b = bloch_eigensystem(cfg);
  const PhaseSchedule hold({PhaseSegment::constant(0.0, 20.0)});
  for (int band : {0, 3}) {
    const MomentumState s = b.state(band);
    CHECK(s.fidelity(propagate(s, hold, cfg)) >= 1.0 - 1e-8);
  }
}

TEST_CASE("gauge equivalence over a long free evolution") {
  LatticeConfig cfg;
  cfg.accel = 0.01;
  cfg.max_substep = 0.005;
  PhaseSchedule s = oracle_schedule();
  s.append(PhaseSegment::constant(0.0, 50.0));
  const MomentumState ground = bloch_eigensystem(LatticeConfig{}).state(0);
  const MomentumState drift = propagate(ground, s, cfg);
  const MomentumState frame = propagate_lattice_frame(ground, s, cfg);
  double worst = 0.0;
  for (int n = -16; n <= 16; ++n)
    worst = std::max(worst, std::abs(drift.population(n) - frame.population(n)));
  CHECK(worst <= 1e-6);
}

TEST_CASE("zero-acceleration parity") {
  // Negating every phase mirrors the populations n -> -n when the initial
  // state is parity symmetric.
  LatticeConfig cfg;
  const MomentumState ground = bloch_eigensystem(cfg).state(0);
  const PhaseSchedule s = oracle_schedule();
  const MomentumState plus = propagate(ground, s, cfg);
  const MomentumState minus = propagate(ground, time_reverse(time_reverse(s, true), false), cfg);
  for (int n = -16; n <= 16; ++n) CHECK(std::abs(plus.population(n) - minus.population(-n)) < 1e-12);
}

TEST_CASE("truncation is reported") {
  LatticeConfig cfg;
  cfg.n_max = 8;
  cfg.accel = 2.0;
  const PhaseSchedule s({PhaseSegment::constant(0.0, 20.0)});
  CHECK_THROWS_AS(propagate(bloch_eigensystem(LatticeConfig{.n_max = 8}).state(0), s, cfg),
                  TruncationError);
}
