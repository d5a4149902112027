#pragma once

// Five-region shaken-lattice interferometer:
//   split | free | mirror | free | recombine
// Free regions keep the lattice on with phi = 0. The recombiner is the
// time-reversed splitter, optionally with negated phases.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sli/density.hpp"
#include "sli/lattice.hpp"

namespace sli {

// Instantaneous operation on the comb, used for analytically ideal parts.
struct IdealUnitary {
  std::string name;
  CMatrix matrix;
};

class Component {
 public:
  Component(PhaseSchedule schedule) : kind_(std::move(schedule)) {}
  Component(IdealUnitary unitary) : kind_(std::move(unitary)) {}

  bool is_schedule() const { return std::holds_alternative<PhaseSchedule>(kind_); }
  const PhaseSchedule& schedule() const;
  const IdealUnitary& unitary() const;
  double duration() const;

  MomentumState apply(const MomentumState& state, const LatticeConfig& cfg,
                      double t0) const;

 private:
  std::variant<PhaseSchedule, IdealUnitary> kind_;
};

struct InterferometerSequence {
  Component split;
  double free1 = 10.0;
  Component mirror;
  double free2 = 10.0;
  Component recombine;
  std::optional<bool> negate;  // recombiner phases negated, when derived

  // [start, end) of the five regions.
  std::vector<std::pair<double, double>> regions() const;
  double duration() const;
  // Single schedule for all five regions; requires schedule components.
  PhaseSchedule flattened() const;
};

// Recombiner = time_reverse(split, negate).
InterferometerSequence assemble(const PhaseSchedule& split,
                                const PhaseSchedule& mirror, double free_time,
                                bool negate);

struct Calibration {
  bool negate = false;
  double ground_band[2] = {0.0, 0.0};  // indexed by the negate flag
};

// Runs both recombiner variants at a = 0 and keeps the one returning more
// ground-band population.
Calibration calibrate_negate(const PhaseSchedule& split,
                             const PhaseSchedule& mirror, double free_time,
                             const LatticeConfig& cfg);
InterferometerSequence assemble_calibrated(const PhaseSchedule& split,
                                           const PhaseSchedule& mirror,
                                           double free_time,
                                           const LatticeConfig& cfg,
                                           Calibration* calibration = nullptr);

// Swap of Bloch bands 0 and 3; identity on the rest. Self-inverse.
IdealUnitary ideal_splitter(const LatticeConfig& cfg);
// Momentum inversion n -> -n.
IdealUnitary ideal_mirror(const LatticeConfig& cfg);
InterferometerSequence ideal_sequence(const LatticeConfig& cfg, double free_time);

struct OutputDistribution {
  int n_max = 0;
  std::vector<double> probabilities;  // index n + n_max
  double accel = 0.0;
  double total_time = 0.0;
  double ground_band = 0.0;  // |<band 0|psi>|^2

  double probability(int n) const { return probabilities.at(n + n_max); }
};

// Final state of the sequence started from the ground Bloch state.
MomentumState run_state(const InterferometerSequence& seq, double accel,
                        const LatticeConfig& cfg);
// Comb populations of run_state. A TruncationError is rethrown with the
// acceleration in the message.
OutputDistribution run(const InterferometerSequence& seq, double accel,
                       const LatticeConfig& cfg);

DensityMovie density_movie(const InterferometerSequence& seq,
                           const LatticeConfig& cfg, const DensityGrid& grid,
                           const DensityOptions& options);

// Slopes (in v_r) of the right and left branch peak centroids over the
// frames in [t_begin, t_end]; see branch_peak_centroids.
struct BranchVelocities {
  double right = 0.0;
  double left = 0.0;
};
BranchVelocities branch_velocities(const DensityMovie& movie, double t_begin,
                                   double t_end, double half_window,
                                   double split = 0.0);

// Peak-centroid half window: 8 lattice periods.
inline constexpr double kBranchHalfWindow = 8.0 * std::numbers::pi;

// Branch velocities in the two free regions. The first free region skips its
// first 5 time units while the split branches separate; the second drops 2 at
// each end.
struct FreeRegionVelocities {
  BranchVelocities first;
  BranchVelocities second;
};
FreeRegionVelocities free_region_velocities(const InterferometerSequence& seq,
                                            const DensityMovie& movie);

}  // namespace sli
