#pragma once

// Run configuration: INI-style text with [sections] and `key = value` lines.
// `#` and `;` start comments. Keys before the first section belong to [run].
// Omitted keys keep their defaults; unknown keys and out-of-range values are
// errors that carry the line number.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "sli/dqn.hpp"
#include "sli/lattice.hpp"

namespace sli {

enum class NegatePolicy { kAuto, kOn, kOff };

struct RunConfig {
  // [run]
  std::uint64_t seed = 1;
  std::string output_dir = "runs";

  // [lattice]
  LatticeConfig lattice;

  // [splitter]
  double action_duration = 0.25;
  Hyperparameters splitter = splitter_hyperparameters();

  // [mirror]
  Hyperparameters mirror = mirror_hyperparameters();
  double scan_amplitude_min = 0.4;
  double scan_amplitude_max = 1.2;
  double scan_amplitude_step = 0.05;

  // [interferometer]
  double free_time = 10.0;
  NegatePolicy negate = NegatePolicy::kAuto;

  // [estimation]
  double true_accel = -3e-4;
  double grid_half_width = 3e-4;
  std::size_t grid_points = 1201;
  std::size_t measurements = 10000;
  std::size_t trials = 20;
  double bragg_wavenumber = 2.0;

  // [density]
  std::size_t density_sites = 1024;
  std::size_t density_points_per_site = 16;
  double envelope_width = 4.0;
  double density_dt = 0.005;
  std::size_t density_stride = 20;

  bool operator==(const RunConfig&) const = default;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// Every key, one per line, in a form parse_config reads back exactly.
std::string serialize_config(const RunConfig& cfg);

// SLI_SEED and SLI_OUTPUT_DIR, when set, replace the corresponding fields.
void apply_environment(RunConfig& cfg);

}  // namespace sli
