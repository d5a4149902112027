#include "app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "sli/estimation.hpp"

namespace sli::app {

namespace fs = std::filesystem;

SplitterConfig splitter_config(const RunConfig& cfg) {
  SplitterConfig s;
  s.lattice = cfg.lattice;
  s.action_duration = cfg.action_duration;
  s.max_steps = cfg.splitter.max_steps;
  s.threshold = cfg.splitter.fidelity_threshold;
  return s;
}

MirrorConfig mirror_config(const RunConfig& cfg) {
  MirrorConfig m;
  m.lattice = cfg.lattice;
  m.max_half_cycles = cfg.mirror.max_steps;
  m.threshold = cfg.mirror.fidelity_threshold;
  return m;
}

namespace {

void echo_hyperparameters(Protocol& p, const RunConfig& cfg, const Hyperparameters& h) {
  p.params = {{"depth", format_number(cfg.lattice.depth)},
              {"n_max", std::to_string(cfg.lattice.n_max)},
              {"gamma", format_number(h.gamma)},
              {"tau", format_number(h.tau)},
              {"learning_rate", format_number(h.learning_rate)},
              {"episodes", std::to_string(h.episodes)},
              {"epsilon_decay", format_number(h.epsilon_decay)},
              {"hidden", std::to_string(h.hidden)},
              {"batch", std::to_string(h.batch)},
              {"max_steps", std::to_string(h.max_steps)},
              {"threshold", format_number(h.fidelity_threshold)}};
}

}  // namespace

Protocol splitter_protocol(const RunConfig& cfg, const SplitterTask& task,
                           const TrainResult& result, std::uint64_t seed) {
  Protocol p;
  p.task = "splitter";
  p.seed = seed;
  p.fidelity = result.record.best_fidelity;
  echo_hyperparameters(p, cfg, cfg.splitter);
  p.params.emplace_back("action_duration", format_number(cfg.action_duration));
  p.actions = result.record.best_actions;
  p.schedule = task.schedule(p.actions);
  return p;
}

Protocol mirror_protocol(const RunConfig& cfg, const MirrorTask& task,
                         const TrainResult& result, std::uint64_t seed) {
  Protocol p;
  p.task = "mirror";
  p.seed = seed;
  p.fidelity = result.record.best_fidelity;
  echo_hyperparameters(p, cfg, cfg.mirror);
  p.actions = result.record.best_actions;
  p.schedule = task.schedule(p.actions);
  return p;
}

InterferometerSequence learned_sequence(const RunConfig& cfg, const PhaseSchedule& split,
                                        const PhaseSchedule& mirror,
                                        Calibration* calibration) {
  switch (cfg.negate) {
    case NegatePolicy::kOn:
      return assemble(split, mirror, cfg.free_time, true);
    case NegatePolicy::kOff:
      return assemble(split, mirror, cfg.free_time, false);
    default:
      return assemble_calibrated(split, mirror, cfg.free_time, cfg.lattice, calibration);
  }
}

DensityGrid density_grid(const RunConfig& cfg) {
  DensityGrid g;
  g.sites = cfg.density_sites;
  g.points_per_site = cfg.density_points_per_site;
  return g;
}

DensityOptions density_options(const RunConfig& cfg) {
  DensityOptions o;
  o.envelope_width = cfg.envelope_width;
  o.dt = cfg.density_dt;
  o.sample_stride = cfg.density_stride;
  return o;
}

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

struct Context {
  RunConfig cfg;
  fs::path dir;
  std::ostream& out;
  std::ostream& err;
  bool quiet;

  std::string path(const std::string& name) const { return (dir / name).string(); }
};

Context open_run(const Common& c, const std::string& name, std::ostream& out,
                 std::ostream& err) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  apply_environment(cfg);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  cfg.lattice.validate();
  Context ctx{cfg, fs::path(cfg.output_dir) / name, out, err, c.quiet};
  fs::create_directories(ctx.dir);
  std::ofstream echo(ctx.path("config.cfg"));
  echo << serialize_config(cfg);
  if (!echo) throw std::runtime_error("cannot write " + ctx.path("config.cfg"));
  return ctx;
}

void write_training_csv(const std::string& path, const TrainingRecord& rec) {
  CsvWriter csv(path, {"episode", "steps", "fidelity", "return", "epsilon", "mean_td_loss",
                       "updates"});
  for (const auto& e : rec.episodes)
    csv.row({static_cast<double>(e.episode), static_cast<double>(e.steps), e.fidelity, e.ret,
             e.epsilon, e.mean_loss, static_cast<double>(e.updates)});
  csv.close();
}

std::function<void(const EpisodeStats&)> progress(const Context& ctx, std::uint64_t seed) {
  if (ctx.quiet) return {};
  return [&ctx, seed](const EpisodeStats& s) {
    if ((s.episode + 1) % 500 == 0)
      ctx.err << "seed " << seed << " episode " << s.episode + 1 << " fidelity " << s.fidelity
              << " epsilon " << s.epsilon << '\n';
  };
}

template <class Task, class MakeProtocol>
int train_task(Context& ctx, const std::string& kind, Task& task,
               const Hyperparameters& hyper, std::size_t runs, MakeProtocol make_protocol) {
  CsvWriter summary(ctx.path("summary.csv"), {"seed", "best_fidelity", "best_episode",
                                              "best_steps"});
  std::optional<Protocol> best;
  for (std::size_t r = 0; r < runs; ++r) {
    const std::uint64_t seed = ctx.cfg.seed + r;
    const TrainResult result = train(task, hyper, seed, progress(ctx, seed));
    const std::string tag = "_seed" + std::to_string(seed);
    write_training_csv(ctx.path("training" + tag + ".csv"), result.record);
    save_checkpoint(ctx.path("checkpoint" + tag + ".bin"), {result.online, result.adam});
    const Protocol p = make_protocol(result, seed);
    save_protocol(ctx.path(kind + tag + ".protocol"), p);
    summary.row({static_cast<double>(seed), result.record.best_fidelity,
                 static_cast<double>(result.record.best_episode),
                 static_cast<double>(result.record.best_actions.size())});
    ctx.out << kind << " seed " << seed << ": best fidelity "
            << format_number(result.record.best_fidelity) << " at episode "
            << result.record.best_episode << '\n';
    if (!best || p.fidelity > best->fidelity) best = p;
  }
  summary.close();
  save_protocol(ctx.path(kind + ".protocol"), *best);
  ctx.out << "best " << kind << " fidelity " << format_number(best->fidelity) << " (seed "
          << best->seed << ") -> " << ctx.path(kind + ".protocol") << '\n';
  return 0;
}

Protocol require_protocol(const std::string& path, const std::string& what,
                          const std::string& producer) {
  if (path.empty())
    throw UsageError("missing " + what + " protocol: pass --" + what +
                     " FILE (create one with `sli " + producer + "`), or use --ideal");
  if (!fs::exists(path))
    throw UsageError(what + " protocol '" + path + "' does not exist (create one with `sli " +
                     producer + "`)");
  return load_protocol(path);
}

struct SequenceInputs {
  std::string splitter;
  std::string mirror;
  bool ideal = false;
};

InterferometerSequence make_sequence(const Context& ctx, const SequenceInputs& in,
                                     bool allow_ideal) {
  if (in.ideal) {
    if (!allow_ideal) throw UsageError("--ideal is not available for this command");
    return ideal_sequence(ctx.cfg.lattice, ctx.cfg.free_time);
  }
  const Protocol s = require_protocol(in.splitter, "splitter", "train-splitter");
  const Protocol m = require_protocol(in.mirror, "mirror", "train-mirror");
  Calibration cal;
  InterferometerSequence seq = learned_sequence(ctx.cfg, s.schedule, m.schedule, &cal);
  if (ctx.cfg.negate == NegatePolicy::kAuto)
    ctx.out << "recombiner calibration: ground band " << format_number(cal.ground_band[0])
            << " (plain), " << format_number(cal.ground_band[1]) << " (negated) -> negate "
            << (cal.negate ? "true" : "false") << '\n';
  return seq;
}

void add_sequence_options(CLI::App* sub, SequenceInputs& in) {
  sub->add_option("--splitter", in.splitter, "splitter protocol file");
  sub->add_option("--mirror", in.mirror, "mirror protocol file");
  sub->add_flag("--ideal", in.ideal, "use analytically ideal splitter and mirror");
}

std::vector<std::string> comb_header(const std::string& prefix, int n_max) {
  std::vector<std::string> h;
  for (int n = -n_max; n <= n_max; ++n) h.push_back(prefix + std::to_string(n));
  return h;
}

int cmd_train_splitter(Context& ctx, std::optional<std::size_t> episodes, std::size_t runs) {
  Hyperparameters hyper = ctx.cfg.splitter;
  if (episodes) hyper.episodes = *episodes;
  ctx.cfg.splitter = hyper;
  SplitterTask task(splitter_config(ctx.cfg));
  return train_task(ctx, "splitter", task, hyper, runs,
                    [&](const TrainResult& r, std::uint64_t seed) {
                      return splitter_protocol(ctx.cfg, task, r, seed);
                    });
}

int cmd_train_mirror(Context& ctx, std::optional<std::size_t> episodes, std::size_t runs) {
  Hyperparameters hyper = ctx.cfg.mirror;
  if (episodes) hyper.episodes = *episodes;
  ctx.cfg.mirror = hyper;
  MirrorTask task(mirror_config(ctx.cfg));
  return train_task(ctx, "mirror", task, hyper, runs,
                    [&](const TrainResult& r, std::uint64_t seed) {
                      return mirror_protocol(ctx.cfg, task, r, seed);
                    });
}

int cmd_baseline_mirror(Context& ctx) {
  std::vector<double> amps;
  for (std::size_t k = 0;; ++k) {
    const double a = ctx.cfg.scan_amplitude_min + static_cast<double>(k) * ctx.cfg.scan_amplitude_step;
    if (a > ctx.cfg.scan_amplitude_max + 1e-12) break;
    amps.push_back(a);
  }
  const auto scan = baseline_mirror_scan(ctx.cfg.lattice, amps, ctx.cfg.mirror.max_steps);
  CsvWriter csv(ctx.path("baseline_mirror.csv"),
                {"amplitude_rad", "half_cycles", "duration_inv_omega_r", "channel_fidelity"});
  const MirrorScanPoint* best = nullptr;
  for (const auto& p : scan) {
    csv.row({p.amplitude, static_cast<double>(p.half_cycles), p.duration, p.fidelity});
    if (!best || p.fidelity > best->fidelity) best = &p;
  }
  csv.close();
  Protocol proto;
  proto.task = "baseline-mirror";
  proto.seed = ctx.cfg.seed;
  proto.fidelity = best->fidelity;
  proto.params = {{"depth", format_number(ctx.cfg.lattice.depth)},
                  {"n_max", std::to_string(ctx.cfg.lattice.n_max)}};
  proto.schedule = mirror_schedule(std::vector<double>(best->half_cycles, best->amplitude));
  save_protocol(ctx.path("baseline_mirror.protocol"), proto);
  ctx.out << "best fixed-amplitude mirror: amplitude " << format_number(best->amplitude)
          << " rad, " << best->half_cycles << " half cycles, channel fidelity "
          << format_number(best->fidelity) << '\n';
  return 0;
}

int cmd_run_interferometer(Context& ctx, const SequenceInputs& in, double accel) {
  const InterferometerSequence seq = make_sequence(ctx, in, true);
  const OutputDistribution d = run(seq, accel, ctx.cfg.lattice);
  CsvWriter csv(ctx.path("distribution.csv"), {"n", "momentum_hbar_kL", "probability"});
  for (int n = -d.n_max; n <= d.n_max; ++n)
    csv.row({static_cast<double>(n), comb_momentum(n), d.probability(n)});
  csv.close();
  ctx.out << "a = " << format_number(accel) << " omega_r v_r, total time "
          << format_number(d.total_time) << " / omega_r, ground band population "
          << format_number(d.ground_band) << '\n';
  return 0;
}

int cmd_estimate(Context& ctx, const SequenceInputs& in) {
  const RunConfig& c = ctx.cfg;
  const InterferometerSequence seq = make_sequence(ctx, in, true);
  const AccelGrid grid = AccelGrid::centered(c.true_accel, c.grid_half_width, c.grid_points);
  const LikelihoodTable table = build_likelihood(
      seq, grid, c.lattice, [&](std::size_t done, std::size_t total) {
        if (!ctx.quiet && (done % 100 == 0 || done == total))
          ctx.err << "likelihood " << done << "/" << total << '\n';
      });
  table.validate(1e-8);
  {
    std::vector<std::string> h{"accel_omega_r_v_r"};
    for (auto& s : comb_header("p_n", c.lattice.n_max)) h.push_back(s);
    CsvWriter csv(ctx.path("likelihood.csv"), h);
    std::vector<double> row(h.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      row[0] = grid.value(j);
      for (Eigen::Index k = 0; k < table.probabilities.cols(); ++k)
        row[k + 1] = table.probabilities(j, k);
      csv.row(row);
    }
    csv.close();
  }

  // Posterior snapshots from one record.
  {
    const MeasurementRecord rec = sample_measurements(table, c.true_accel, c.measurements, c.seed);
    std::vector<std::size_t> snaps;
    for (std::size_t n = 1; n <= c.measurements; n *= 10) snaps.push_back(n);
    std::vector<std::string> h{"accel_omega_r_v_r"};
    for (std::size_t n : snaps) h.push_back("posterior_N" + std::to_string(n));
    std::vector<Posterior> posts;
    PosteriorAccumulator acc(table, uniform_prior(grid.size()));
    for (std::size_t m = 0; m < rec.outcomes.size() && posts.size() < snaps.size(); ++m) {
      acc.update(rec.outcomes[m]);
      if (acc.count() == snaps[posts.size()]) posts.push_back(acc.posterior());
    }
    CsvWriter csv(ctx.path("posterior.csv"), h);
    std::vector<double> row(h.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      row[0] = grid.value(j);
      for (std::size_t s = 0; s < posts.size(); ++s) row[s + 1] = posts[s][j];
      csv.row(row);
    }
    csv.close();
  }

  const SigmaCurve sli = sigma_vs_n_experiment(table, c.true_accel, c.measurements, c.trials, c.seed);
  const double t_bragg = seq.duration() / 2.0;
  const LikelihoodTable bragg_table = bragg_likelihood(grid, t_bragg, c.bragg_wavenumber);
  const SigmaCurve bragg =
      sigma_vs_n_experiment(bragg_table, c.true_accel, c.measurements, c.trials, c.seed);

  CsvWriter csv(ctx.path("sigma_curve.csv"),
                {"n", "sigma_sli_omega_r_v_r", "sigma_sli_sem", "mean_error_sli", "cr_sli",
                 "sigma_bragg_omega_r_v_r", "sigma_bragg_sem", "cr_bragg"});
  double ratio = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < sli.n.size(); ++i) {
    csv.row({static_cast<double>(sli.n[i]), sli.sigma[i], sli.sigma_sem[i], sli.mean_error[i],
             sli.cr[i], bragg.sigma[i], bragg.sigma_sem[i], bragg.cr[i]});
    if (sli.n[i] == 1000) ratio = sli.sigma[i] / bragg.sigma[i];
  }
  csv.close();

  std::ofstream summary(ctx.path("summary.txt"));
  summary << "total_time = " << format_number(seq.duration()) << '\n'
          << "bragg_time = " << format_number(t_bragg) << '\n'
          << "bragg_wavenumber = " << format_number(c.bragg_wavenumber) << '\n'
          << "fisher_sli = " << format_number(sli.fisher) << '\n'
          << "fisher_bragg_numeric = " << format_number(bragg.fisher) << '\n'
          << "fisher_bragg_analytic = " << format_number(bragg_fisher(t_bragg, c.bragg_wavenumber))
          << '\n'
          << "slope_sli = " << format_number(sli.slope) << '\n'
          << "slope_bragg = " << format_number(bragg.slope) << '\n'
          << "sigma_ratio_N1000 = " << format_number(ratio) << '\n';
  ctx.out << "SLI Fisher information " << format_number(sli.fisher) << ", Bragg "
          << format_number(bragg.fisher) << " (T = " << format_number(t_bragg) << ")\n"
          << "log-log slope " << format_number(sli.slope) << ", sigma_SLI / sigma_Bragg at N = 1000: "
          << format_number(ratio) << '\n';
  return 0;
}

int cmd_bragg_baseline(Context& ctx, double t) {
  const RunConfig& c = ctx.cfg;
  const AccelGrid grid = AccelGrid::centered(c.true_accel, c.grid_half_width, c.grid_points);
  CsvWriter csv(ctx.path("bragg.csv"), {"accel_omega_r_v_r", "p_plus", "p_minus"});
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto p = bragg_baseline(grid.value(j), t, c.bragg_wavenumber);
    csv.row({grid.value(j), p[0], p[1]});
  }
  csv.close();
  const double info = bragg_fisher(t, c.bragg_wavenumber);
  ctx.out << "Bragg T = " << format_number(t) << " / omega_r, k_L = "
          << format_number(c.bragg_wavenumber) << ": Fisher information " << format_number(info)
          << ", single-shot CR bound " << format_number(cr_bound(info, 1)) << '\n';
  return 0;
}

int cmd_export_density(Context& ctx, const SequenceInputs& in, std::size_t x_stride) {
  if (x_stride < 1) throw UsageError("--x-stride must be >= 1");
  const InterferometerSequence seq = make_sequence(ctx, in, false);
  const DensityMovie movie =
      density_movie(seq, ctx.cfg.lattice, density_grid(ctx.cfg), density_options(ctx.cfg));
  {
    CsvWriter csv(ctx.path("density.csv"), {"t_inv_omega_r", "x_inv_kL", "density_kL"});
    for (const auto& f : movie.frames)
      for (std::size_t j = 0; j < movie.x.size(); j += x_stride)
        csv.row({f.t, movie.x[j], f.density[j]});
    csv.close();
  }
  CsvWriter csv(ctx.path("centroids.csv"),
                {"t_inv_omega_r", "left_peak_x_inv_kL", "right_peak_x_inv_kL"});
  for (const auto& f : movie.frames) {
    const auto b = branch_peak_centroids(movie.x, f.density, kBranchHalfWindow, 0.0);
    csv.row({f.t, b.left, b.right});
  }
  csv.close();
  const FreeRegionVelocities v = free_region_velocities(seq, movie);
  CsvWriter vel(ctx.path("velocities.csv"),
                {"region", "right_branch_v_r", "left_branch_v_r"});
  vel.row({2.0, v.first.right, v.first.left});
  vel.row({4.0, v.second.right, v.second.left});
  vel.close();
  ctx.out << "branch velocities (v_r): first free region " << format_number(v.first.right)
          << " / " << format_number(v.first.left) << ", second free region "
          << format_number(v.second.right) << " / " << format_number(v.second.left) << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shaken-lattice interferometer: training, simulation and estimation", "sli"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "run configuration file")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "random seed (overrides config and SLI_SEED)");
    sub->add_option("--out", common.out,
                    "output root (overrides config and SLI_OUTPUT_DIR); files go to OUT/<command>");
    sub->add_flag("--quiet", common.quiet, "no progress messages");
  };

  std::optional<std::size_t> episodes;
  std::size_t runs = 1;
  SequenceInputs inputs;
  double accel = 0.0;
  double bragg_time = 20.0;
  std::size_t x_stride = 8;

  auto* ts = app.add_subcommand("train-splitter", "train the splitter agent");
  auto* tm = app.add_subcommand("train-mirror", "train the mirror agent");
  for (auto* sub : {ts, tm}) {
    add_common(sub);
    sub->add_option("--episodes", episodes, "override the episode count");
    sub->add_option("--runs", runs, "independent seeds seed..seed+runs-1")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1000}));
  }
  auto* bm = app.add_subcommand("baseline-mirror", "fixed-amplitude mirror scan");
  add_common(bm);
  auto* ri = app.add_subcommand("run-interferometer", "output distribution at one acceleration");
  add_common(ri);
  add_sequence_options(ri, inputs);
  ri->add_option("--accel", accel, "acceleration (omega_r v_r)");
  auto* es = app.add_subcommand("estimate", "likelihood, posteriors and sigma vs N");
  add_common(es);
  add_sequence_options(es, inputs);
  auto* bb = app.add_subcommand("bragg-baseline", "analytic Bragg interferometer");
  add_common(bb);
  bb->add_option("--time", bragg_time, "pulse separation T (1/omega_r)")
      ->check(CLI::PositiveNumber);
  auto* ed = app.add_subcommand("export-density", "real-space density of the full sequence");
  add_common(ed);
  ed->add_option("--splitter", inputs.splitter, "splitter protocol file");
  ed->add_option("--mirror", inputs.mirror, "mirror protocol file");
  ed->add_option("--x-stride", x_stride, "write every k-th grid point");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    Context ctx = open_run(common, sub->get_name(), out, err);
    if (sub == ts) return cmd_train_splitter(ctx, episodes, runs);
    if (sub == tm) return cmd_train_mirror(ctx, episodes, runs);
    if (sub == bm) return cmd_baseline_mirror(ctx);
    if (sub == ri) return cmd_run_interferometer(ctx, inputs, accel);
    if (sub == es) return cmd_estimate(ctx, inputs);
    if (sub == bb) return cmd_bragg_baseline(ctx, bragg_time);
    if (sub == ed) return cmd_export_density(ctx, inputs, x_stride);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace sli::app
