#include "sli/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace sli {

namespace {

std::vector<std::string> split_words(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string w; ss >> w;) out.push_back(w);
  return out;
}

double to_double(const std::string& s, int line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw FormatError("expected a finite number, got '" + s + "'", line);
  return v;
}

std::uint64_t to_unsigned(const std::string& s, int line) {
  std::uint64_t v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw FormatError("expected a nonnegative integer, got '" + s + "'", line);
  return v;
}

void expect_words(const std::vector<std::string>& w, std::size_t n, int line) {
  if (w.size() != n)
    throw FormatError("'" + w[0] + "' takes " + std::to_string(n - 1) + " value(s)", line);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void read_exact(std::istream& in, char* b, std::size_t n) {
  in.read(b, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw FormatError("checkpoint is truncated", 0);
}

std::uint64_t get_le(std::istream& in, int bytes) {
  char b[8];
  read_exact(in, b, bytes);
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_le(in, 8)); }

void put_params(std::ostream& out, const MlpParams& p) {
  p.for_each_array([&](const std::vector<double>& a) {
    for (double v : a) put_f64(out, v);
  });
}

void get_params(std::istream& in, MlpParams& p) {
  p.for_each_array([&](std::vector<double>& a) {
    for (double& v : a) v = get_f64(in);
  });
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_protocol(std::ostream& out, const Protocol& p) {
  out << "sli-protocol " << kProtocolVersion << '\n';
  out << "task " << p.task << '\n';
  out << "seed " << p.seed << '\n';
  out << "fidelity " << format_number(p.fidelity) << '\n';
  for (const auto& [k, v] : p.params) out << "param " << k << ' ' << v << '\n';
  if (!p.actions.empty()) {
    out << "actions";
    for (std::size_t a : p.actions) out << ' ' << a;
    out << '\n';
  }
  out << "segments " << p.schedule.size() << '\n';
  for (const PhaseSegment& s : p.schedule.segments()) {
    if (const auto* c = std::get_if<ConstantPhase>(&s.kind())) {
      out << "constant " << format_number(c->phase) << ' ' << format_number(s.duration())
          << '\n';
    } else {
      const auto& h = std::get<SinusoidHalfCycle>(s.kind());
      out << "half_cycle " << format_number(h.amplitude) << ' '
          << format_number(s.duration()) << ' ' << format_number(h.start) << '\n';
    }
  }
}

Protocol read_protocol(std::istream& in) {
  Protocol p;
  std::string raw;
  int line = 0;
  auto next = [&]() -> std::vector<std::string> {
    while (std::getline(in, raw)) {
      ++line;
      auto w = split_words(raw);
      if (!w.empty() && w[0][0] != '#') return w;
    }
    return {};
  };

  auto w = next();
  if (w.size() != 2 || w[0] != "sli-protocol")
    throw FormatError("not a protocol file (expected 'sli-protocol <version>')", line);
  const std::uint64_t version = to_unsigned(w[1], line);
  if (version != kProtocolVersion)
    throw FormatError("unsupported protocol version " + w[1] + " (this build reads " +
                          std::to_string(kProtocolVersion) + ")",
                      line);

  bool have_task = false;
  std::size_t segment_count = 0;
  for (;;) {
    w = next();
    if (w.empty()) throw FormatError("missing 'segments' line", line);
    if (w[0] == "task") {
      expect_words(w, 2, line);
      p.task = w[1];
      have_task = true;
    } else if (w[0] == "seed") {
      expect_words(w, 2, line);
      p.seed = to_unsigned(w[1], line);
    } else if (w[0] == "fidelity") {
      expect_words(w, 2, line);
      p.fidelity = to_double(w[1], line);
    } else if (w[0] == "param") {
      expect_words(w, 3, line);
      p.params.emplace_back(w[1], w[2]);
    } else if (w[0] == "actions") {
      for (std::size_t i = 1; i < w.size(); ++i) p.actions.push_back(to_unsigned(w[i], line));
    } else if (w[0] == "segments") {
      expect_words(w, 2, line);
      segment_count = to_unsigned(w[1], line);
      break;
    } else {
      throw FormatError("unknown record '" + w[0] + "'", line);
    }
  }
  if (!have_task) throw FormatError("missing 'task' line", line);

  std::vector<PhaseSegment> segs;
  segs.reserve(segment_count);
  for (std::size_t i = 0; i < segment_count; ++i) {
    w = next();
    if (w.empty())
      throw FormatError("expected " + std::to_string(segment_count) + " segments, found " +
                            std::to_string(i),
                        line);
    if (w[0] == "constant") {
      expect_words(w, 3, line);
      const double duration = to_double(w[2], line);
      if (!(duration > 0.0)) throw FormatError("segment duration must be > 0", line);
      segs.push_back(PhaseSegment::constant(to_double(w[1], line), duration));
    } else if (w[0] == "half_cycle") {
      expect_words(w, 4, line);
      const double duration = to_double(w[2], line);
      if (std::abs(duration - kHalfCycleDuration) > 1e-12)
        throw FormatError("half_cycle duration must be pi/12", line);
      segs.push_back(PhaseSegment::half_cycle(to_double(w[1], line), to_double(w[3], line)));
    } else {
      throw FormatError("unknown segment kind '" + w[0] + "'", line);
    }
  }
  if (!next().empty()) throw FormatError("unexpected content after the last segment", line);
  p.schedule = PhaseSchedule(std::move(segs));
  return p;
}

void save_protocol(const std::string& path, const Protocol& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_protocol(out, p);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Protocol load_protocol(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open protocol file '" + path + "'");
  try {
    return read_protocol(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what(), 0);
  }
}

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  if (!c.params.congruent(c.adam.m) || !c.params.congruent(c.adam.v))
    throw std::invalid_argument("checkpoint Adam moments do not match the network");
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u32(out, kCheckpointVersion);
  put_u64(out, c.params.input);
  put_u64(out, c.params.hidden);
  put_u64(out, c.params.output);
  put_u64(out, c.adam.step);
  put_params(out, c.params);
  put_params(out, c.adam.m);
  put_params(out, c.adam.v);
  put_f64(out, c.adam.beta1);
  put_f64(out, c.adam.beta2);
  put_f64(out, c.adam.eps);
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[sizeof kCheckpointMagic];
  read_exact(in, magic, sizeof magic);
  if (!std::equal(magic, magic + sizeof magic, kCheckpointMagic))
    throw FormatError("not a checkpoint file (bad magic)", 0);
  const auto version = static_cast<std::uint32_t>(get_le(in, 4));
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 0);
  const std::uint64_t input = get_le(in, 8);
  const std::uint64_t hidden = get_le(in, 8);
  const std::uint64_t output = get_le(in, 8);
  constexpr std::uint64_t kLimit = 1u << 20;
  if (input == 0 || hidden == 0 || output == 0 || input > kLimit || hidden > kLimit ||
      output > kLimit)
    throw FormatError("checkpoint has implausible dimensions", 0);
  Checkpoint c;
  c.params = MlpParams::zeros(input, hidden, output);
  c.adam = AdamState::for_params(c.params);
  c.adam.step = get_le(in, 8);
  get_params(in, c.params);
  get_params(in, c.adam.m);
  get_params(in, c.adam.v);
  c.adam.beta1 = get_f64(in);
  c.adam.beta2 = get_f64(in);
  c.adam.eps = get_f64(in);
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError("trailing bytes after checkpoint", 0);
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_checkpoint(out, c);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  try {
    return read_checkpoint(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what(), 0);
  }
}

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> header)
    : path_(path), columns_(header.size()), out_(path) {
  if (!out_) throw std::runtime_error("cannot write '" + path + "'");
  if (header.empty()) throw std::invalid_argument("CSV needs at least one column");
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::row(std::span<const double> values) {
  if (values.size() != columns_)
    throw std::invalid_argument(path_ + ": row has " + std::to_string(values.size()) +
                                " values, header has " + std::to_string(columns_));
  for (std::size_t i = 0; i < values.size(); ++i)
    out_ << (i ? "," : "") << format_number(values[i]);
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw std::runtime_error("write failed for '" + path_ + "'");
}

}  // namespace sli
