#include "sli/interferometer.hpp"

#include <sstream>

namespace sli {

namespace {

LatticeConfig at_rest(LatticeConfig cfg) {
  cfg.accel = 0.0;
  return cfg;
}

PhaseSchedule free_schedule(double duration) {
  if (duration <= 0.0) return {};
  return PhaseSchedule({PhaseSegment::constant(0.0, duration)});
}

}  // namespace

const PhaseSchedule& Component::schedule() const {
  if (!is_schedule()) throw std::logic_error("component is an ideal unitary");
  return std::get<PhaseSchedule>(kind_);
}

const IdealUnitary& Component::unitary() const {
  if (is_schedule()) throw std::logic_error("component is a phase schedule");
  return std::get<IdealUnitary>(kind_);
}

double Component::duration() const {
  return is_schedule() ? schedule().duration() : 0.0;
}

MomentumState Component::apply(const MomentumState& state,
                               const LatticeConfig& cfg, double t0) const {
  if (is_schedule()) return propagate(state, schedule(), cfg, t0);
  const CMatrix& u = unitary().matrix;
  if (u.rows() != state.dim())
    throw std::invalid_argument("ideal component dimension mismatch");
  return MomentumState(state.n_max(), u * state.amplitudes());
}

std::vector<std::pair<double, double>> InterferometerSequence::regions() const {
  const double lengths[5] = {split.duration(), free1, mirror.duration(), free2,
                             recombine.duration()};
  std::vector<std::pair<double, double>> out;
  double t = 0.0;
  for (double len : lengths) {
    out.emplace_back(t, t + len);
    t += len;
  }
  return out;
}

double InterferometerSequence::duration() const { return regions().back().second; }

PhaseSchedule InterferometerSequence::flattened() const {
  PhaseSchedule s;
  s.append(split.schedule());
  s.append(free_schedule(free1));
  s.append(mirror.schedule());
  s.append(free_schedule(free2));
  s.append(recombine.schedule());
  return s;
}

InterferometerSequence assemble(const PhaseSchedule& split,
                                const PhaseSchedule& mirror, double free_time,
                                bool negate) {
  if (!(free_time >= 0.0)) throw std::invalid_argument("free time must be >= 0");
  return InterferometerSequence{split, free_time, mirror, free_time,
                                time_reverse(split, negate), negate};
}

Calibration calibrate_negate(const PhaseSchedule& split,
                             const PhaseSchedule& mirror, double free_time,
                             const LatticeConfig& cfg) {
  Calibration c;
  for (int flag = 0; flag < 2; ++flag)
    c.ground_band[flag] =
        run(assemble(split, mirror, free_time, flag == 1), 0.0, cfg).ground_band;
  c.negate = c.ground_band[1] > c.ground_band[0];
  return c;
}

InterferometerSequence assemble_calibrated(const PhaseSchedule& split,
                                           const PhaseSchedule& mirror,
                                           double free_time,
                                           const LatticeConfig& cfg,
                                           Calibration* calibration) {
  const Calibration c = calibrate_negate(split, mirror, free_time, cfg);
  if (calibration) *calibration = c;
  return assemble(split, mirror, free_time, c.negate);
}

IdealUnitary ideal_splitter(const LatticeConfig& cfg) {
  const BlochSpectrum spec = bloch_eigensystem(at_rest(cfg));
  const Eigen::VectorXd b0 = spec.vectors.col(0);
  const Eigen::VectorXd b3 = spec.vectors.col(3);
  Eigen::MatrixXd u = Eigen::MatrixXd::Identity(cfg.dim(), cfg.dim());
  u += -b0 * b0.transpose() - b3 * b3.transpose() + b3 * b0.transpose() +
       b0 * b3.transpose();
  return {"ideal-splitter", u.cast<Complex>()};
}

IdealUnitary ideal_mirror(const LatticeConfig& cfg) {
  CMatrix u = CMatrix::Zero(cfg.dim(), cfg.dim());
  for (int n = -cfg.n_max; n <= cfg.n_max; ++n) u(cfg.index(-n), cfg.index(n)) = 1.0;
  return {"ideal-mirror", u};
}

InterferometerSequence ideal_sequence(const LatticeConfig& cfg, double free_time) {
  IdealUnitary s = ideal_splitter(cfg);
  IdealUnitary r{"ideal-recombiner", s.matrix.adjoint()};
  return InterferometerSequence{std::move(s), free_time, ideal_mirror(cfg),
                                free_time, std::move(r), std::nullopt};
}

MomentumState run_state(const InterferometerSequence& seq, double accel,
                        const LatticeConfig& cfg) {
  LatticeConfig moving = cfg;
  moving.accel = accel;
  const auto regions = seq.regions();
  MomentumState psi = bloch_eigensystem(at_rest(cfg)).state(0);
  psi = seq.split.apply(psi, moving, regions[0].first);
  psi = propagate(psi, free_schedule(seq.free1), moving, regions[1].first);
  psi = seq.mirror.apply(psi, moving, regions[2].first);
  psi = propagate(psi, free_schedule(seq.free2), moving, regions[3].first);
  return seq.recombine.apply(psi, moving, regions[4].first);
}

OutputDistribution run(const InterferometerSequence& seq, double accel,
                       const LatticeConfig& cfg) {
  OutputDistribution out;
  MomentumState psi(cfg.n_max);
  try {
    psi = run_state(seq, accel, cfg);
  } catch (const TruncationError& e) {
    std::ostringstream os;
    os << "interferometer at a = " << accel << ": " << e.what();
    throw TruncationError(os.str(), e.edge_population());
  }
  out.n_max = cfg.n_max;
  out.probabilities = psi.populations();
  out.accel = accel;
  out.total_time = seq.duration();
  out.ground_band = bloch_eigensystem(at_rest(cfg)).state(0).fidelity(psi);
  return out;
}

DensityMovie density_movie(const InterferometerSequence& seq,
                           const LatticeConfig& cfg, const DensityGrid& grid,
                           const DensityOptions& options) {
  return position_density_evolution(seq.flattened(), cfg, grid, options);
}

BranchVelocities branch_velocities(const DensityMovie& movie, double t_begin,
                                   double t_end, double half_window,
                                   double split) {
  std::vector<double> t, right, left;
  for (const auto& f : movie.frames) {
    if (f.t < t_begin - 1e-12 || f.t > t_end + 1e-12) continue;
    const auto c = branch_peak_centroids(movie.x, f.density, half_window, split);
    t.push_back(f.t);
    right.push_back(c.right);
    left.push_back(c.left);
  }
  if (t.size() < 2) throw std::invalid_argument("branch_velocities: window holds < 2 frames");
  return {fit_slope(t, right) / kVelocityUnit, fit_slope(t, left) / kVelocityUnit};
}

FreeRegionVelocities free_region_velocities(const InterferometerSequence& seq,
                                            const DensityMovie& movie) {
  const auto r = seq.regions();
  return {branch_velocities(movie, r[1].first + 5.0, r[1].second, kBranchHalfWindow),
          branch_velocities(movie, r[3].first + 2.0, r[3].second - 2.0, kBranchHalfWindow)};
}

}  // namespace sli
