#include "sli/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <vector>

namespace sli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw std::invalid_argument("expected a finite number, got '" + text + "'");
  return v;
}

std::uint64_t parse_unsigned(const std::string& text) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty() || text[0] == '-')
    throw std::invalid_argument("expected a nonnegative integer, got '" + text + "'");
  return v;
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

struct Range {
  double lo;
  double hi;
  bool lo_open = false;
  bool hi_open = false;

  bool contains(double v) const {
    return (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
  }
  std::string describe() const {
    std::ostringstream os;
    os << (lo_open ? "(" : "[") << lo << ", " << hi << (hi_open ? ")" : "]");
    return os.str();
  }
};

template <class Access>
Field real(std::string section, std::string key, Access access, Range range) {
  Field f{section, key, nullptr, nullptr};
  f.get = [access](const RunConfig& c) { return format_double(access(c)); };
  f.set = [access, range, section, key](RunConfig& c, const std::string& text) {
    const double v = parse_double(text);
    if (!range.contains(v))
      throw std::out_of_range("[" + section + "] " + key + " = " + text +
                              " is outside " + range.describe());
    access(c) = v;
  };
  return f;
}

template <class Access>
Field integer(std::string section, std::string key, Access access, std::uint64_t lo,
              std::uint64_t hi) {
  Field f{section, key, nullptr, nullptr};
  f.get = [access](const RunConfig& c) { return std::to_string(access(c)); };
  f.set = [access, lo, hi, section, key](RunConfig& c, const std::string& text) {
    const std::uint64_t v = parse_unsigned(text);
    if (v < lo || v > hi)
      throw std::out_of_range("[" + section + "] " + key + " = " + text +
                              " is outside [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
    access(c) = static_cast<std::remove_reference_t<decltype(access(c))>>(v);
  };
  return f;
}

#define SLI_FIELD(expr) [](auto& c) -> auto& { return expr; }

void add_hyperparameters(std::vector<Field>& f, const std::string& s,
                         Hyperparameters RunConfig::*member,
                         const std::string& steps_key) {
  auto h = [member](auto& c) -> auto& { return c.*member; };
  f.push_back(integer(s, steps_key, [h](auto& c) -> auto& { return h(c).max_steps; }, 1, 1000000));
  f.push_back(real(s, "threshold", [h](auto& c) -> auto& { return h(c).fidelity_threshold; },
                   {0.0, 1.0, true, true}));
  f.push_back(real(s, "gamma", [h](auto& c) -> auto& { return h(c).gamma; }, {0.0, 1.0}));
  f.push_back(real(s, "tau", [h](auto& c) -> auto& { return h(c).tau; }, {0.0, 1.0}));
  f.push_back(real(s, "learning_rate", [h](auto& c) -> auto& { return h(c).learning_rate; },
                   {0.0, 1.0, true}));
  f.push_back(integer(s, "episodes", [h](auto& c) -> auto& { return h(c).episodes; }, 1,
                      100000000));
  f.push_back(real(s, "epsilon_decay", [h](auto& c) -> auto& { return h(c).epsilon_decay; },
                   {0.0, 1.0}));
  f.push_back(real(s, "epsilon_floor", [h](auto& c) -> auto& { return h(c).epsilon_floor; },
                   {0.0, 1.0}));
  f.push_back(integer(s, "hidden", [h](auto& c) -> auto& { return h(c).hidden; }, 1, 100000));
  f.push_back(integer(s, "batch", [h](auto& c) -> auto& { return h(c).batch; }, 1, 100000));
  f.push_back(integer(s, "replay_capacity",
                      [h](auto& c) -> auto& { return h(c).replay_capacity; }, 1, 100000000));
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(integer("run", "seed", SLI_FIELD(c.seed), 0,
                        std::numeric_limits<std::uint64_t>::max()));
    f.push_back(Field{"run", "output_dir",
                      [](const RunConfig& c) { return c.output_dir; },
                      [](RunConfig& c, const std::string& v) {
                        if (v.empty()) throw std::invalid_argument("[run] output_dir is empty");
                        c.output_dir = v;
                      }});

    f.push_back(real("lattice", "depth", SLI_FIELD(c.lattice.depth), {0.0, 1000.0, true}));
    f.push_back(integer("lattice", "n_max", SLI_FIELD(c.lattice.n_max), 8, 512));
    f.push_back(integer("lattice", "substeps", SLI_FIELD(c.lattice.substeps), 1, 100000));
    f.push_back(real("lattice", "max_substep", SLI_FIELD(c.lattice.max_substep),
                     {0.0, 10.0, true}));

    f.push_back(real("splitter", "action_duration", SLI_FIELD(c.action_duration),
                     {0.0, 100.0, true}));
    add_hyperparameters(f, "splitter", &RunConfig::splitter, "max_steps");

    add_hyperparameters(f, "mirror", &RunConfig::mirror, "max_half_cycles");
    f.push_back(real("mirror", "scan_amplitude_min", SLI_FIELD(c.scan_amplitude_min),
                     {0.0, 10.0}));
    f.push_back(real("mirror", "scan_amplitude_max", SLI_FIELD(c.scan_amplitude_max),
                     {0.0, 10.0}));
    f.push_back(real("mirror", "scan_amplitude_step", SLI_FIELD(c.scan_amplitude_step),
                     {0.0, 10.0, true}));

    f.push_back(real("interferometer", "free_time", SLI_FIELD(c.free_time), {0.0, 1000.0}));
    f.push_back(Field{"interferometer", "negate",
                      [](const RunConfig& c) -> std::string {
                        switch (c.negate) {
                          case NegatePolicy::kOn: return "true";
                          case NegatePolicy::kOff: return "false";
                          default: return "auto";
                        }
                      },
                      [](RunConfig& c, const std::string& v) {
                        if (v == "auto") c.negate = NegatePolicy::kAuto;
                        else if (v == "true") c.negate = NegatePolicy::kOn;
                        else if (v == "false") c.negate = NegatePolicy::kOff;
                        else
                          throw std::invalid_argument(
                              "[interferometer] negate must be auto, true or false, got '" +
                              v + "'");
                      }});

    f.push_back(real("estimation", "true_accel", SLI_FIELD(c.true_accel), {-0.1, 0.1}));
    f.push_back(real("estimation", "grid_half_width", SLI_FIELD(c.grid_half_width),
                     {0.0, 1.0, true}));
    f.push_back(integer("estimation", "grid_points", SLI_FIELD(c.grid_points), 3, 1000000));
    f.push_back(integer("estimation", "measurements", SLI_FIELD(c.measurements), 100,
                        100000000));
    f.push_back(integer("estimation", "trials", SLI_FIELD(c.trials), 1, 100000));
    f.push_back(real("estimation", "bragg_wavenumber", SLI_FIELD(c.bragg_wavenumber),
                     {0.0, 100.0, true}));

    f.push_back(integer("density", "sites", SLI_FIELD(c.density_sites), 2, 1 << 20));
    f.push_back(integer("density", "points_per_site", SLI_FIELD(c.density_points_per_site),
                        16, 4096));
    f.push_back(real("density", "envelope_width", SLI_FIELD(c.envelope_width),
                     {0.0, 1e6, true}));
    f.push_back(real("density", "dt", SLI_FIELD(c.density_dt), {0.0, 1.0, true}));
    f.push_back(integer("density", "sample_stride", SLI_FIELD(c.density_stride), 1,
                        100000000));
    return f;
  }();
  return table;
}

#undef SLI_FIELD

void validate_cross_fields(const RunConfig& c) {
  if (c.scan_amplitude_max < c.scan_amplitude_min)
    throw ConfigError("[mirror] scan_amplitude_max is below scan_amplitude_min", 0);
  if (c.splitter.replay_capacity < c.splitter.batch)
    throw ConfigError("[splitter] replay_capacity is below batch", 0);
  if (c.mirror.replay_capacity < c.mirror.batch)
    throw ConfigError("[mirror] replay_capacity is below batch", 0);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section = "run";
  std::set<std::string> known_sections;
  for (const auto& f : fields()) known_sections.insert(f.section);
  std::set<std::string> seen;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("malformed section header '" + s + "'", line);
      section = trim(s.substr(1, s.size() - 2));
      if (!known_sections.count(section))
        throw ConfigError("unknown section [" + section + "]", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value', got '" + s + "'", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    const Field* field = nullptr;
    for (const auto& f : fields())
      if (f.section == section && f.key == key) field = &f;
    if (!field) throw ConfigError("unknown key '" + key + "' in [" + section + "]", line);
    if (!seen.insert(section + "." + key).second)
      throw ConfigError("duplicate key '" + key + "' in [" + section + "]", line);
    try {
      field->set(cfg, value);
    } catch (const std::exception& e) {
      std::string msg = e.what();
      if (msg.find(key) == std::string::npos) msg = "[" + section + "] " + key + ": " + msg;
      throw ConfigError(msg, line);
    }
  }
  validate_cross_fields(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(cfg) << '\n';
  }
  return os.str();
}

void apply_environment(RunConfig& cfg) {
  if (const char* seed = std::getenv("SLI_SEED")) {
    try {
      cfg.seed = parse_unsigned(trim(seed));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("SLI_SEED: ") + e.what(), 0);
    }
  }
  if (const char* dir = std::getenv("SLI_OUTPUT_DIR"); dir && *dir) cfg.output_dir = dir;
}

}  // namespace sli
