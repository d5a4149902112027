#pragma once

// Reinforcement-learning environments built on the lattice model.
//
// SplitterTask: drive the ground Bloch state into the band-3 q = 0 state,
// which is close to an equal superposition of +-4 hbar k_L, using piecewise
// constant lattice phases.
//
// MirrorTask: build a propagator that exchanges +4 and -4 hbar k_L (comb
// indices +-2), one drive half cycle phi = A sin(12 t) at a time.

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "sli/lattice.hpp"

namespace sli {

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
};

class EpisodeFinished : public std::logic_error {
 public:
  EpisodeFinished() : std::logic_error("step called after the episode ended") {}
};

// F / (1 - F), with F capped just below 1.
double fidelity_reward(double fidelity);

// Action tables, index order fixed.
inline constexpr std::array<double, 5> kSplitterPhases = {
    -std::numbers::pi, -std::numbers::pi / 2, -std::numbers::pi / 4, 0.0,
    std::numbers::pi / 2};
inline constexpr std::array<double, 5> kMirrorAmplitudes = {0.4, 0.6, 0.8, 1.0,
                                                            1.2};

// Comb index of the +4 hbar k_L target component.
inline constexpr int kTargetComb = 2;
// Observations cover comb indices -3..3.
inline constexpr int kObservedHalfWidth = 3;

struct SplitterConfig {
  LatticeConfig lattice;
  double action_duration = 0.25;  // 1/omega_r
  std::size_t max_steps = 60;
  double threshold = 0.95;
  int target_band = 3;

  void validate() const;
};

double splitter_fidelity(const MomentumState& state, const MomentumState& target);

// Populations at comb indices -3..3.
std::vector<double> population_observation(const MomentumState& state);

class SplitterTask {
 public:
  explicit SplitterTask(const SplitterConfig& cfg);

  std::size_t observation_size() const { return 2 * kObservedHalfWidth + 1; }
  std::size_t action_count() const { return kSplitterPhases.size(); }

  std::vector<double> reset();
  StepResult step(std::size_t action);

  double fidelity() const;
  bool done() const { return done_; }
  std::size_t steps() const { return steps_; }
  const MomentumState& state() const { return state_; }
  const MomentumState& initial() const { return initial_; }
  const MomentumState& target() const { return target_; }
  const SplitterConfig& config() const { return cfg_; }

  PhaseSchedule schedule(std::span<const std::size_t> actions) const;

 private:
  SplitterConfig cfg_;
  MomentumState initial_;
  MomentumState target_;
  std::vector<CMatrix> action_unitaries_;
  MomentumState state_;
  CVector scratch_;
  std::size_t steps_ = 0;
  bool done_ = true;
};

// Exchange of comb indices +-p on a 2-dimensional subspace.
struct SubspaceTarget {
  int n_max = 16;
  int comb = kTargetComb;

  CMatrix projector() const;
  // |p><-p| + |-p><p|
  CMatrix target_map() const;
};

// [Tr(M M^dag) + |Tr M|^2] / (d (d + 1)), M = P U_target^dag U P, d = 2.
double channel_fidelity(const CMatrix& u, const SubspaceTarget& target);
// Same quantity from the 2x2 block B = <i|U|j>, i, j in {+p, -p}.
double channel_fidelity_block(const Eigen::Matrix2cd& block);
// Block of U on (+p, -p), rows and columns in that order.
Eigen::Matrix2cd subspace_block(const CMatrix& u, const SubspaceTarget& target);
// min over chi of || B - e^{i chi} X ||_2 with X the swap, using the chi that
// is optimal in the Frobenius norm.
double swap_distance(const Eigen::Matrix2cd& block);

struct MirrorConfig {
  LatticeConfig lattice;
  std::size_t max_half_cycles = 16;
  double threshold = 0.95;

  void validate() const;
};

class MirrorTask {
 public:
  explicit MirrorTask(const MirrorConfig& cfg);

  std::size_t observation_size() const { return 2 * (2 * kObservedHalfWidth + 1); }
  std::size_t action_count() const { return kMirrorAmplitudes.size(); }

  std::vector<double> reset();
  StepResult step(std::size_t action);

  double fidelity() const;
  bool done() const { return done_; }
  std::size_t steps() const { return steps_; }
  // Columns U|+p> and U|-p>.
  const CMatrix& columns() const { return cols_; }
  Eigen::Matrix2cd block() const;
  const MirrorConfig& config() const { return cfg_; }

  // Half cycle k starts at drive time k pi/12.
  PhaseSchedule schedule(std::span<const std::size_t> actions) const;

 private:
  std::vector<double> observe() const;

  MirrorConfig cfg_;
  // [amplitude][parity of the half-cycle index]
  std::vector<std::array<CMatrix, 2>> half_cycle_unitaries_;
  CMatrix cols_;
  CMatrix scratch_;
  std::size_t steps_ = 0;
  bool done_ = true;
};

PhaseSchedule mirror_schedule(std::span<const double> amplitudes);

struct MirrorScanPoint {
  double amplitude = 0.0;
  std::size_t half_cycles = 0;
  double duration = 0.0;
  double fidelity = 0.0;
};

// Constant-amplitude drive for 1..max_half_cycles half cycles, every
// amplitude in the list.
std::vector<MirrorScanPoint> baseline_mirror_scan(const LatticeConfig& lattice,
                                                  std::span<const double> amplitudes,
                                                  std::size_t max_half_cycles);

}  // namespace sli
