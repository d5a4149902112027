#pragma once

// File formats: protocol text files, binary network checkpoints and CSV.
//
// Protocol file (text, one record per line):
//
//   sli-protocol 1
//   task splitter
//   seed 3
//   fidelity 0.97041...
//   param action_duration 0.25
//   actions 1 2 1 3 ...
//   segments 32
//   constant <phase> <duration>
//   half_cycle <amplitude> <duration> <start>
//
// Numbers are written with 17 significant digits so a round trip is exact.

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sli/lattice.hpp"
#include "sli/mlp.hpp"

namespace sli {

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

inline constexpr int kProtocolVersion = 1;

struct Protocol {
  std::string task;  // "splitter", "mirror" or "baseline-mirror"
  std::uint64_t seed = 0;
  double fidelity = 0.0;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::size_t> actions;
  PhaseSchedule schedule;

  bool operator==(const Protocol&) const = default;
};

std::string format_number(double v);

void write_protocol(std::ostream& out, const Protocol& p);
Protocol read_protocol(std::istream& in);
void save_protocol(const std::string& path, const Protocol& p);
Protocol load_protocol(const std::string& path);

inline constexpr char kCheckpointMagic[8] = {'S', 'L', 'I', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  MlpParams params;
  AdamState adam;

  bool operator==(const Checkpoint&) const = default;
};

// Little-endian: magic, version (u32), input, hidden, output, adam step
// (u64), then w1 b1 w2 b2, Adam m and v in the same order, beta1 beta2 eps
// (f64).
void write_checkpoint(std::ostream& out, const Checkpoint& c);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> header);

  void row(std::span<const double> values);
  void row(std::initializer_list<double> values) {
    row(std::span<const double>(values.begin(), values.size()));
  }
  void close();

 private:
  std::string path_;
  std::size_t columns_;
  std::ofstream out_;
};

}  // namespace sli
