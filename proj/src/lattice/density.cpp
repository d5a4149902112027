#include "sli/density.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <fftw3.h>

namespace sli {

double DensityGrid::extent() const {
  return static_cast<double>(sites) * std::numbers::pi;
}

double DensityGrid::spacing() const {
  return extent() / static_cast<double>(points());
}

double DensityGrid::x(std::size_t j) const {
  return -0.5 * extent() + static_cast<double>(j) * spacing();
}

void DensityGrid::validate() const {
  if (sites < 2) throw std::invalid_argument("density grid needs >= 2 sites");
  if (points_per_site < 16)
    throw std::invalid_argument("density grid needs >= 16 points per site");
}

namespace {

class FftPair {
 public:
  explicit FftPair(std::vector<Complex>& data) {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    const int n = static_cast<int>(data.size());
    forward_ = fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!forward_ || !backward_) throw std::runtime_error("FFTW planning failed");
  }
  ~FftPair() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  FftPair(const FftPair&) = delete;
  FftPair& operator=(const FftPair&) = delete;

  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }

 private:
  fftw_plan forward_;
  fftw_plan backward_;
};

double edge_density(const std::vector<Complex>& psi, std::size_t period) {
  double worst = 0.0;
  for (std::size_t j = 0; j < period; ++j) {
    worst = std::max(worst, std::norm(psi[j]));
    worst = std::max(worst, std::norm(psi[psi.size() - 1 - j]));
  }
  return worst;
}

}  // namespace

DensityMovie position_density_evolution(const PhaseSchedule& schedule,
                                        const LatticeConfig& cfg,
                                        const DensityGrid& grid,
                                        const DensityOptions& options) {
  grid.validate();
  if (!(options.envelope_width > 0.0))
    throw std::invalid_argument("envelope width must be positive");
  if (!(options.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (options.sample_stride < 1)
    throw std::invalid_argument("sample_stride must be >= 1");

  LatticeConfig static_cfg = cfg;
  static_cfg.accel = 0.0;
  const BlochSpectrum spectrum = bloch_eigensystem(static_cfg);

  const std::size_t n = grid.points();
  const double dx = grid.spacing();
  const double sigma = options.envelope_width * std::numbers::pi;
  DensityMovie movie;
  movie.x.resize(n);
  std::vector<Complex> psi(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = grid.x(j);
    movie.x[j] = x;
    Complex bloch = 0.0;
    for (int m = -cfg.n_max; m <= cfg.n_max; ++m)
      bloch += spectrum.vectors(cfg.index(m), 0) * std::polar(1.0, 2.0 * m * x);
    psi[j] = bloch * std::exp(-0.5 * x * x / (sigma * sigma));
  }
  double norm = 0.0;
  for (const auto& v : psi) norm += std::norm(v) * dx;
  for (auto& v : psi) v /= std::sqrt(norm);
  if (edge_density(psi, grid.points_per_site) > 1e-8)
    throw std::invalid_argument("initial envelope does not fit inside the box");

  // Angular wavenumbers in FFTW order.
  std::vector<double> k(n);
  const double dk = 2.0 * std::numbers::pi / grid.extent();
  for (std::size_t j = 0; j < n; ++j) {
    const auto signed_j = j < (n + 1) / 2 ? static_cast<double>(j)
                                          : static_cast<double>(j) - static_cast<double>(n);
    k[j] = signed_j * dk;
  }

  FftPair fft(psi);
  const double inv_n = 1.0 / static_cast<double>(n);

  auto snapshot = [&](double t) {
    DensityFrame f;
    f.t = t;
    f.density.resize(n);
    for (std::size_t j = 0; j < n; ++j) f.density[j] = std::norm(psi[j]);
    movie.frames.push_back(std::move(f));
  };
  auto check_box = [&](double t) {
    const double edge = edge_density(psi, grid.points_per_site);
    if (edge > kBoxOverflowLimit) {
      std::ostringstream os;
      os << "wave packet reached the box edge at t = " << t
         << " (edge density " << edge << "); enlarge the grid";
      throw BoxOverflow(os.str(), edge, t);
    }
  };

  snapshot(0.0);
  double seg_start = 0.0;
  std::size_t step_count = 0;
  bool last_stored = true;
  for (const auto& seg : schedule.segments()) {
    const int steps = std::max(1, static_cast<int>(std::ceil(seg.duration() / options.dt - 1e-9)));
    const double h = seg.duration() / steps;
    for (int s = 0; s < steps; ++s) {
      const double tau = (s + 0.5) * h;
      const double t_mid = seg_start + tau;
      const double phase = seg.phase_at(tau);
      const double drift = cfg.accel * t_mid;
      // Strang splitting: half potential, full kinetic, half potential.
      auto half_potential = [&] {
        for (std::size_t j = 0; j < n; ++j) {
          const double v = -0.5 * cfg.depth * std::cos(2.0 * movie.x[j] + phase);
          psi[j] *= std::polar(1.0, -0.5 * h * v);
        }
      };
      half_potential();
      fft.forward();
      for (std::size_t j = 0; j < n; ++j) {
        const double kk = k[j] - drift;
        psi[j] *= std::polar(inv_n, -h * kk * kk);
      }
      fft.backward();
      half_potential();

      ++step_count;
      last_stored = false;
      if (step_count % options.sample_stride == 0) {
        check_box(seg_start + (s + 1) * h);
        snapshot(seg_start + (s + 1) * h);
        last_stored = true;
      }
    }
    seg_start += seg.duration();
  }
  check_box(seg_start);
  if (!last_stored) snapshot(seg_start);
  return movie;
}

double frame_norm(const DensityMovie& movie, std::size_t frame) {
  const auto& d = movie.frames.at(frame).density;
  const double dx = movie.x.size() > 1 ? movie.x[1] - movie.x[0] : 1.0;
  double s = 0.0;
  for (double v : d) s += v;
  return s * dx;
}

double centroid(const std::vector<double>& x, const std::vector<double>& density) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    num += x[j] * density[j];
    den += density[j];
  }
  return den > 0.0 ? num / den : 0.0;
}

BranchCentroids branch_centroids(const std::vector<double>& x,
                                 const std::vector<double>& density,
                                 double split) {
  double nl = 0.0, dl = 0.0, nr = 0.0, dr = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < split) {
      nl += x[j] * density[j];
      dl += density[j];
    } else {
      nr += x[j] * density[j];
      dr += density[j];
    }
  }
  return {dl > 0.0 ? nl / dl : split, dr > 0.0 ? nr / dr : split};
}

BranchCentroids branch_peak_centroids(const std::vector<double>& x,
                                      const std::vector<double>& density,
                                      double half_window, double split) {
  const std::size_t n = x.size();
  if (n < 2 || density.size() != n)
    throw std::invalid_argument("branch_peak_centroids: bad frame");
  if (!(half_window > 0.0))
    throw std::invalid_argument("branch_peak_centroids: window must be positive");
  const double dx = x[1] - x[0];
  const auto period = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(std::numbers::pi / dx)));
  // Running mean over one period, centred.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) prefix[j + 1] = prefix[j] + density[j];
  auto smooth = [&](std::size_t j) {
    const std::size_t lo = j >= period / 2 ? j - period / 2 : 0;
    const std::size_t hi = std::min(n, lo + period);
    return (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  };
  auto local = [&](bool right) {
    std::size_t best = n;
    double peak = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if ((x[j] >= split) != right) continue;
      const double v = smooth(j);
      if (v > peak) {
        peak = v;
        best = j;
      }
    }
    if (best == n) return split;
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(x[j] - x[best]) > half_window) continue;
      num += x[j] * density[j];
      den += density[j];
    }
    return den > 0.0 ? num / den : x[best];
  };
  return {local(false), local(true)};
}

double fit_slope(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size() || t.size() < 2)
    throw std::invalid_argument("fit_slope needs >= 2 matching points");
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= static_cast<double>(t.size());
  my /= static_cast<double>(t.size());
  double sty = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sty += (t[i] - mt) * (y[i] - my);
    stt += (t[i] - mt) * (t[i] - mt);
  }
  if (stt == 0.0) throw std::invalid_argument("fit_slope: degenerate times");
  return sty / stt;
}

}  // namespace sli
