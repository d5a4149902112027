#pragma once

// Real-space evolution of a lattice wave packet by split-step Fourier
// propagation.
//
// Position x is measured in 1/k_L, so the lattice period is pi and a velocity
// of 1 v_r equals 2 x-units per 1/omega_r. The Hamiltonian in these units is
// H = -d^2/dx^2 - (V0/2) cos(2x + phi(t)); with nonzero acceleration the
// kinetic term is (k - a t)^2, matching the comb model.

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "sli/lattice.hpp"

namespace sli {

inline constexpr double kVelocityUnit = 2.0;  // x-units per 1/omega_r per v_r

struct DensityGrid {
  std::size_t sites = 1024;         // box length in lattice periods
  std::size_t points_per_site = 16; // >= 16 resolves the 2 k_L modulation

  std::size_t points() const { return sites * points_per_site; }
  double extent() const;      // box length in x-units
  double spacing() const;
  double x(std::size_t j) const;  // centred box, x(0) = -extent/2
  void validate() const;
};

struct DensityFrame {
  double t = 0.0;
  std::vector<double> density;  // |psi(x)|^2 per x-unit
};

struct DensityMovie {
  std::vector<double> x;
  std::vector<DensityFrame> frames;
};

class BoxOverflow : public std::runtime_error {
 public:
  BoxOverflow(const std::string& what, double edge_density, double t)
      : std::runtime_error(what), edge_density_(edge_density), t_(t) {}
  double edge_density() const { return edge_density_; }
  double time() const { return t_; }

 private:
  double edge_density_;
  double t_;
};

inline constexpr double kBoxOverflowLimit = 1e-4;

struct DensityOptions {
  double envelope_width = 4.0;   // lattice sites, 1/e half width of |psi|
  double dt = 0.005;             // split-step size, 1/omega_r
  std::size_t sample_stride = 20;  // steps between stored frames
};

// Initial state: ground q = 0 Bloch state times a Gaussian envelope,
// renormalized on the grid. Frames are taken at t = 0, every sample_stride
// steps and at the end. Throws BoxOverflow once the outermost lattice period
// at either edge holds density above kBoxOverflowLimit, and
// std::invalid_argument when the initial envelope is not contained.
DensityMovie position_density_evolution(const PhaseSchedule& schedule,
                                        const LatticeConfig& cfg,
                                        const DensityGrid& grid,
                                        const DensityOptions& options);

double frame_norm(const DensityMovie& movie, std::size_t frame);
double centroid(const std::vector<double>& x, const std::vector<double>& density);

struct BranchCentroids {
  double left = 0.0;
  double right = 0.0;
};
// Centroids of the parts of a frame left and right of `split`.
BranchCentroids branch_centroids(const std::vector<double>& x,
                                 const std::vector<double>& density,
                                 double split = 0.0);
// Per side: smooth the density over one lattice period, locate its maximum
// and take the centroid within +-half_window x-units of it. Follows the main
// packet of each branch and ignores slower residue.
BranchCentroids branch_peak_centroids(const std::vector<double>& x,
                                      const std::vector<double>& density,
                                      double half_window, double split = 0.0);

// Least-squares slope of y(t).
double fit_slope(const std::vector<double>& t, const std::vector<double>& y);

}  // namespace sli
