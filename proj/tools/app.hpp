#pragma once

// Pipelines behind the `sli` command line, callable in-process.

#include <iosfwd>
#include <string>
#include <vector>

#include "sli/config.hpp"
#include "sli/dqn.hpp"
#include "sli/interferometer.hpp"
#include "sli/io.hpp"
#include "sli/tasks.hpp"

namespace sli::app {

SplitterConfig splitter_config(const RunConfig& cfg);
MirrorConfig mirror_config(const RunConfig& cfg);

// Protocol for the best episode of a training run.
Protocol splitter_protocol(const RunConfig& cfg, const SplitterTask& task,
                           const TrainResult& result, std::uint64_t seed);
Protocol mirror_protocol(const RunConfig& cfg, const MirrorTask& task,
                         const TrainResult& result, std::uint64_t seed);

// Five-region sequence from learned components; the negate flag follows the
// config policy (auto calibrates at a = 0).
InterferometerSequence learned_sequence(const RunConfig& cfg, const PhaseSchedule& split,
                                        const PhaseSchedule& mirror,
                                        Calibration* calibration = nullptr);

DensityGrid density_grid(const RunConfig& cfg);
DensityOptions density_options(const RunConfig& cfg);

// Parses args (without the program name) and runs the subcommand. Returns
// the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sli::app
