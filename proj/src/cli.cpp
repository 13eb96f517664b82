#include "fbv/cli.hpp"

#include "fbv/errors.hpp"
#include "fbv/heat.hpp"
#include "fbv/io.hpp"
#include "fbv/ks.hpp"
#include "fbv/parallel.hpp"
#include "fbv/renewal.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <ostream>

namespace fbv::cli {

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

// Six decimals, truncated: log 3 / log 2 prints as 1.584962.
std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", std::trunc(v * 1e6 + 1e-6) / 1e6);
  return buf;
}

FractalSystem load_system(const RunConfig& cfg, int default_level) {
  if (!cfg.preset.empty() && !cfg.config_path.empty()) throw UsageError("--preset and --config are exclusive");
  const int level = cfg.level.value_or(default_level);
  if (!cfg.config_path.empty()) {
    FractalSystem sys = load_system_config(cfg.config_path);
    return cfg.level ? sys.with_window(level) : sys;
  }
  return build_preset(cfg.preset.empty() ? std::string("sierpinski") : cfg.preset, level);
}

std::filesystem::path out_path(const RunConfig& cfg, const std::string& file) {
  std::string dir = cfg.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("FRACTAL_BV_OUT");
    dir = env && *env ? env : ".";
  }
  return std::filesystem::path(dir) / file;
}

EngineOptions engine_options(const RunConfig& cfg) { return {cfg.depth, cfg.width_target, cfg.memoize}; }

std::pair<Cell, Cell> cell_pair(const FractalSystem& sys, const RunConfig& cfg) {
  if (cfg.cells.empty()) return reference_pair(sys);
  const auto cells = parse_cells(sys, cfg.cells);
  if (cells.size() != 2) throw UsageError("--cells must name exactly two cells for this subcommand");
  return {cells[0], cells[1]};
}

CellUnion union_of(const FractalSystem& sys, const RunConfig& cfg) {
  if (!cfg.cells.empty()) return CellUnion::refined_from(sys, parse_cells(sys, cfg.cells));
  return example_union(sys, cfg.union_name);
}

std::string cells_label(const std::vector<Cell>& cells) {
  std::string s;
  for (const auto& c : cells) s += (s.empty() ? "" : ",") + format_word(c.word());
  return s;
}

double max_width(const Curve& c) {
  double w = 0.0;
  for (const auto& s : c.samples) w = std::max(w, s.width());
  return w;
}

int cmd_info(const RunConfig& cfg, std::ostream& out) {
  const FractalSystem sys = load_system(cfg, 1);
  Summary s;
  s.add("L", sys.L)
      .add("M", sys.M)
      .add("d_h", fixed6(sys.d_h))
      .add("d_w", fixed6(sys.d_w))
      .add("R", sys.R)
      .add("name", sys.name)
      .add("diam", sys.diam)
      .add("vertices", sys.vertex_count())
      .add("window", sys.window_level);
  const auto csv = out_path(cfg, "info.csv");
  std::filesystem::create_directories(csv.parent_path());
  std::FILE* f = std::fopen(csv.string().c_str(), "wb");
  if (!f) throw IoError("cannot write " + csv.string());
  // Parameters are written at round-trip precision so they can be compared to closed forms.
  std::fprintf(f, "key,value\nL,%.17g\nM,%d\nd_h,%.17g\nd_w,%.17g\nR,%d\ndiam,%.17g\nrho,%.17g\nvertices,%zu\nwindow,%d\n",
               sys.L, sys.M, sys.d_h, sys.d_w, sys.R, sys.diam, sys.rho(), sys.vertex_count(), sys.window_level);
  std::fclose(f);
  out << s.add("csv", csv.string()).str() << '\n';
  return 0;
}

std::vector<double> radius_grid(const RunConfig& cfg, const FractalSystem& sys, double start, int ppp, int periods) {
  if (cfg.grid_stop) return geometric_grid_between(start, *cfg.grid_stop, sys.L, ppp);
  return geometric_grid(start, sys.L, ppp, periods);
}

int cmd_ks_profile(const RunConfig& cfg, std::ostream& out, bool oscillation) {
  const FractalSystem sys = load_system(cfg, 1);
  const auto [A, B] = cell_pair(sys, cfg);
  const double r0 = localization_threshold(sys, A, B);
  const double start = cfg.grid_start.value_or(sys.L * r0);
  const auto grid = radius_grid(cfg, sys, start, cfg.phases.value_or(16), cfg.periods.value_or(oscillation ? 2 : 3));
  const Curve curve = normalized_profile(sys, A, B, grid, engine_options(cfg), cfg.effective_threads());
  const auto periodic = periodicity_check(curve, sys.L);
  const std::string name = oscillation ? "ks_oscillation" : "ks_profile";
  const auto csv = out_path(cfg, name + ".csv");
  write_curve_csv(curve, std::log(sys.L), csv);
  if (cfg.svg) write_svg(curve, out_path(cfg, name + ".svg"), "N(r) " + sys.name);

  Summary s;
  s.add("preset", sys.name).add("cells", cells_label({A, B})).add("r0", r0).add("points", grid.size());
  s.add("width_max", max_width(curve)).add("periodicity_residual", periodic.max_residual);
  // Periodicity is only guaranteed when every compared radius lies at or below L * r0.
  const bool guaranteed = start <= sys.L * r0 * (1 + 1e-12);
  if (oscillation) {
    const auto osc = oscillation_amplitude(curve, std::log(sys.L));
    s.add("amplitude", osc.amplitude).add("mean", osc.mean).add("r_of_max", osc.x_of_max).add("r_of_min", osc.x_of_min);
    s.add("amplitude_certified", osc.certified);
  }
  s.add("periodic", periodic.exact()).add("csv", csv.string());
  out << s.str() << '\n';
  return guaranteed && !periodic.exact() ? 2 : 0;
}

int cmd_ks_union(const RunConfig& cfg, std::ostream& out) {
  const FractalSystem sys = load_system(cfg, 2);
  const CellUnion U = union_of(sys, cfg);
  const auto [A, B] = reference_pair(sys);
  const double r0 = localization_threshold(sys, A, B);
  const double threshold = union_threshold(sys, U);
  const double limit = std::min(threshold, std::pow(sys.L, 2 - U.level()) * r0);
  const double r = cfg.grid_start.value_or(0.9 * limit);
  const auto opts = engine_options(cfg);
  const auto grid = radius_grid(cfg, sys, r, cfg.phases.value_or(4), cfg.periods.value_or(1));
  const Curve curve = normalized_profile(sys, U, grid, opts, cfg.effective_threads(), cfg.direct);
  const auto rec = boundary_recovery(sys, U, r, opts);
  const auto csv = out_path(cfg, "ks_union.csv");
  write_curve_csv(curve, std::log(sys.L), csv);
  if (cfg.svg) write_svg(curve, out_path(cfg, "ks_union.svg"), "N_U(r) " + sys.name);

  Summary s;
  s.add("preset", sys.name).add("cells", U.size()).add("level", U.level()).add("threshold", threshold).add("r", r);
  s.add("boundary_count", rec.boundary_count).add("estimate_lo", rec.estimate.lo).add("estimate_hi", rec.estimate.hi);
  s.add("integers_inside", rec.integers_inside).add("recovered", rec.recovered()).add("csv", csv.string());
  out << s.str() << '\n';
  return rec.estimate.contains(rec.boundary_count) ? 0 : 2;
}

int cmd_ks_limits(const RunConfig& cfg, std::ostream& out) {
  const FractalSystem sys = load_system(cfg, 1);
  const auto [A, B] = cell_pair(sys, cfg);
  const double r0 = localization_threshold(sys, A, B);
  int first = 0;
  while (sys.diam * std::pow(sys.L, -first) > sys.L * r0) ++first;
  std::vector<int> levels;
  for (int m = 0; m < cfg.periods.value_or(2); ++m) levels.push_back(first + m);
  const auto report =
      subsequence_limits(sys, A, B, standard_phases(sys), levels, engine_options(cfg), cfg.effective_threads());

  Curve curve;
  curve.normalization = "r^{-2 d_h} G(r)";
  for (const auto& seq : report.phases)
    for (std::size_t i = 0; i < seq.radii.size(); ++i)
      curve.samples.push_back({seq.radii[i], seq.values[i].lo, seq.values[i].hi});
  std::sort(curve.samples.begin(), curve.samples.end(),
            [](const CurveSample& a, const CurveSample& b) { return a.x > b.x; });
  const auto csv = out_path(cfg, "ks_limits.csv");
  write_curve_csv(curve, std::log(sys.L), csv);
  if (cfg.svg) write_svg(curve, out_path(cfg, "ks_limits.svg"), "N along phase classes " + sys.name);

  Summary s;
  s.add("preset", sys.name).add("levels", levels.size());
  for (std::size_t p = 0; p < report.phases.size(); ++p) {
    const auto& seq = report.phases[p];
    const std::string k = "phase" + std::to_string(p);
    s.add(k, seq.phase).add(k + "_lo", seq.common.lo).add(k + "_hi", seq.common.hi);
  }
  s.add("disjoint", report.disjoint).add("measured_ratio_lo", report.measured_ratio.lo);
  s.add("measured_ratio_hi", report.measured_ratio.hi).add("predicted_ratio", report.predicted_ratio);
  s.add("matches_prediction", report.matches_prediction).add("csv", csv.string());
  out << s.str() << '\n';
  return 0;
}

std::vector<double> time_grid(const RunConfig& cfg, const FractalSystem& sys, double default_start, int ppp,
                              int periods) {
  const double factor = std::pow(sys.L, sys.d_w);
  const double start = cfg.grid_start.value_or(default_start);
  if (cfg.grid_stop) return geometric_grid_between(start, *cfg.grid_stop, factor, ppp);
  return geometric_grid(start, factor, ppp, periods);
}

int cmd_heat_profile(const RunConfig& cfg, std::ostream& out) {
  const FractalSystem sys = load_system(cfg, 1);
  const CellUnion U = union_of(sys, cfg);
  const int N = cfg.N.value_or(6);
  const WalkOperator walk = build_walk(sys, N);
  const auto grid = time_grid(cfg, sys, std::pow(sys.L, -3.0 * sys.d_w), cfg.phases.value_or(16), cfg.periods.value_or(2));
  const HeatCurve curve = heat_union(sys, walk, U, grid, cfg.direct, cfg.effective_threads());
  const int boundary = static_cast<int>(boundary_points(sys, U).size());
  const auto csv = out_path(cfg, "heat_profile.csv");
  write_heat_csv(curve, csv);
  if (cfg.svg) write_svg(curve.rescaled_curve(), out_path(cfg, "heat_profile.svg"), "t^{-d_h/d_w} M_U(t) " + sys.name);

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& x : curve.samples) {
    lo = std::min(lo, x.rescaled);
    hi = std::max(hi, x.rescaled);
  }
  Summary s;
  s.add("preset", sys.name).add("N", N).add("vertices", walk.size()).add("points", grid.size());
  s.add("boundary_count", boundary).add("band_min", lo).add("band_max", hi).add("band_ratio", lo > 0 ? hi / lo : 0.0);
  if (lo > 0.0) {
    try {
      const auto phi = phi_profile(sys, curve, boundary, cfg.bins);
      write_fold_csv(phi.folded, out_path(cfg, "heat_profile_fold.csv"));
      s.add("phi_mean", phi.folded.mean).add("phi_amplitude", phi.folded.amplitude).add("phi_drift", phi.folded.drift);
      s.add("phi_relative_drift", phi.folded.relative_drift).add("fold_periods", phi.folded.n_periods);
    } catch (const PreconditionError&) {
      s.add("fold_periods", 1);
    }
  }
  s.add("csv", csv.string());
  out << s.str() << '\n';
  return lo > 0.0 ? 0 : 2;
}

int cmd_heat_scalecheck(const RunConfig& cfg, std::ostream& out) {
  const FractalSystem sys = load_system(cfg, 1);
  const auto [A, B] = cell_pair(sys, cfg);
  const int N = cfg.N.value_or(5);
  if (N + cfg.n > 9) throw UsageError("N + n must not exceed 9");
  const auto grid = time_grid(cfg, sys, std::pow(sys.L, -2.0 * sys.d_w), cfg.phases.value_or(4), cfg.periods.value_or(1));
  const auto csv = out_path(cfg, "heat_scalecheck.csv");
  std::filesystem::create_directories(csv.parent_path());
  std::FILE* f = std::fopen(csv.string().c_str(), "wb");
  if (!f) throw IoError("cannot write " + csv.string());
  std::fprintf(f, "t,neg_ln_t,k_steps,lhs,rhs,residual,sensitivity\n");
  double worst = 0.0, sensitivity = 0.0;
  for (double t : grid) {
    const auto c = scaling_check_heat(sys, A, B, t, cfg.n, N, 1, !cfg.window_graph);
    std::fprintf(f, "%s,%s,%d,%s,%s,%s,%s\n", format_number(t).c_str(), format_number(-std::log(t)).c_str(), c.steps_lhs,
                 format_number(c.lhs).c_str(), format_number(c.rhs).c_str(), format_number(c.residual).c_str(),
                 format_number(c.sensitivity).c_str());
    worst = std::max(worst, c.residual);
    sensitivity = std::max(sensitivity, c.sensitivity);
  }
  std::fclose(f);
  Summary s;
  s.add("preset", sys.name).add("cells", cells_label({A, B})).add("N", N).add("n", cfg.n);
  s.add("mode", std::string(cfg.window_graph ? "window" : "isomorphic")).add("points", grid.size());
  s.add("max_residual", worst).add("max_sensitivity", sensitivity).add("csv", csv.string());
  out << s.str() << '\n';
  return !cfg.window_graph && worst > 1e-9 ? 2 : 0;
}

Vec2 parse_point(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw UsageError("--start expects x,y");
  try {
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw UsageError("--start expects x,y");
  }
}

int cmd_hit_tail(const RunConfig& cfg, std::ostream& out) {
  const FractalSystem sys = load_system(cfg, 1);
  const CellUnion U = union_of(sys, cfg);
  const int N = cfg.N.value_or(6);
  const WalkOperator walk = build_walk(sys, N);
  Vec2 x;
  if (!cfg.start.empty()) {
    x = parse_point(cfg.start);
  } else {
    // Vertex nearest to the centre of the union's cells.
    Vec2 c;
    for (const auto& cell : U.cells()) c = c + cell_center(sys, cell);
    c = c * (1.0 / static_cast<double>(U.size()));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& v : walk.graph.vertices)
      if (distance(v, c) < best) {
        best = distance(v, c);
        x = v;
      }
  }
  std::vector<double> grid;
  if (cfg.grid_start && cfg.grid_stop) {
    for (int j = 0; j < cfg.points; ++j)
      grid.push_back(*cfg.grid_start * std::pow(*cfg.grid_stop / *cfg.grid_start, j / std::max(1.0, cfg.points - 1.0)));
  } else {
    // Scaled distances from 4 down to 0.6 keep every point in the observable range.
    const double d = hitting_tail_mc(sys, walk, U, x, {walk.time_unit}, 1, cfg.seed, 1).distance_to_complement;
    const double base = std::pow(d, sys.d_w);
    const double t_lo = base * std::pow(4.0, 1.0 - sys.d_w), t_hi = base * std::pow(0.6, 1.0 - sys.d_w);
    for (int j = 0; j < cfg.points; ++j) grid.push_back(t_lo * std::pow(t_hi / t_lo, j / std::max(1.0, cfg.points - 1.0)));
  }
  const auto tail = hitting_tail_mc(sys, walk, U, x, grid, cfg.samples, cfg.seed, cfg.effective_threads());
  const auto csv = out_path(cfg, "hit_tail.csv");
  write_hitting_csv(tail, csv);
  if (cfg.svg) {
    Curve c;
    c.scale = Abscissa::time;
    for (const auto& p : tail.points) c.samples.push_back({p.t, p.ci_lo, p.ci_hi});
    write_svg(c, out_path(cfg, "hit_tail.svg"), "P(exit before t) " + sys.name);
  }
  Summary s;
  s.add("preset", sys.name).add("N", N).add("start_x", x.x).add("start_y", x.y);
  s.add("distance", tail.distance_to_complement).add("samples", static_cast<long long>(cfg.samples));
  s.add("points", grid.size()).add("points_fitted", tail.fit.n).add("slope", tail.fit.slope);
  s.add("intercept", tail.fit.intercept).add("r2", tail.fit.r2).add("csv", csv.string());
  out << s.str() << '\n';
  return 0;
}

int cmd_fold(const RunConfig& cfg, std::ostream& out) {
  if (cfg.input.empty()) throw UsageError("fold needs --input");
  const Curve curve = read_curve_csv(cfg.input);
  double period = 0.0;
  if (cfg.period) {
    period = *cfg.period;
  } else {
    const FractalSystem sys = load_system(cfg, 1);
    period = curve.scale == Abscissa::time ? sys.d_w * std::log(sys.L) : std::log(sys.L);
  }
  const auto profile = fold(to_log_frame(curve, cfg.gamma), period, cfg.bins);
  const auto csv = out_path(cfg, "fold.csv");
  write_fold_csv(profile, csv);
  if (cfg.svg) {
    Curve c;
    c.scale = Abscissa::log;
    for (const auto& b : profile.bins) c.samples.push_back({b.phase, b.mean, b.mean});
    write_svg(c, out_path(cfg, "fold.svg"), "folded profile");
  }
  Summary s;
  s.add("period", period).add("bins", profile.bins.size()).add("n_periods", profile.n_periods);
  s.add("mean", profile.mean).add("amplitude", profile.amplitude).add("drift", profile.drift);
  s.add("relative_drift", profile.relative_drift).add("csv", csv.string());
  out << s.str() << '\n';
  return 0;
}

}  // namespace

void RunConfig::validate() const {
  if (depth < 1 || depth > 14) throw UsageError("--depth must lie in [1, 14]");
  if (N && (*N < 0 || *N > 9)) throw UsageError("--N must lie in [0, 9]");
  if (phases && *phases < 4) throw UsageError("--phases must be at least 4");
  if (periods && *periods < 1) throw UsageError("--periods must be at least 1");
  if (grid_start && !(*grid_start > 0.0)) throw UsageError("--grid-start must be positive");
  if (grid_stop && !(*grid_stop > 0.0)) throw UsageError("--grid-stop must be positive");
  if (grid_start && grid_stop && !(*grid_stop < *grid_start)) throw UsageError("--grid-stop must lie below --grid-start");
  if (!(width_target >= 0.0)) throw UsageError("--width-target must be nonnegative");
  if (period && !(*period > 0.0)) throw UsageError("--period must be positive");
  if (level && *level < 0) throw UsageError("--level must be nonnegative");
  if (n < 1) throw UsageError("--n must be at least 1");
  if (samples < 1) throw UsageError("--samples must be positive");
  if (points < 2) throw UsageError("--points must be at least 2");
  if (bins < 0) throw UsageError("--bins must be nonnegative");
}

unsigned RunConfig::effective_threads() const {
  if (deterministic) return 1;
  return threads == 0 ? default_threads() : threads;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Korevaar-Schoen and heat-semigroup functionals on nested fractals", "fractal-bv"};
  app.require_subcommand(1, 1);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--preset", cfg.preset, "sierpinski | vicsek");
    sub->add_option("--config", cfg.config_path, "custom system file")->check(CLI::ExistingFile);
    sub->add_option("--level", cfg.level, "blow-up window level");
    sub->add_option("--out", cfg.out_dir, "output directory (default $FRACTAL_BV_OUT or .)");
    sub->add_flag("--svg", cfg.svg, "also write an SVG plot");
    sub->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");
    sub->add_flag("--deterministic", cfg.deterministic, "single-threaded reductions");
    sub->add_option("--seed", cfg.seed, "root seed");
  };
  auto engine = [&](CLI::App* sub) {
    sub->add_option("--depth", cfg.depth, "absolute refinement level cap (<= 14)");
    sub->add_option("--width-target", cfg.width_target, "stop deepening once interval width is below this");
    sub->add_flag("--memo,!--no-memo", cfg.memoize, "memoize congruent cell pairs");
  };
  auto grid = [&](CLI::App* sub) {
    sub->add_option("--phases", cfg.phases, "grid points per period (>= 4)");
    sub->add_option("--periods", cfg.periods, "number of periods");
    sub->add_option("--grid-start", cfg.grid_start, "largest grid value");
    sub->add_option("--grid-stop", cfg.grid_stop, "smallest grid value");
  };
  auto cells = [&](CLI::App* sub, bool with_union) {
    sub->add_option("--cells", cfg.cells, "cell words, e.g. \"1-2 1-3\"");
    if (with_union) sub->add_option("--union", cfg.union_name, "single | pair | staircase | mixed");
  };

  auto* info = app.add_subcommand("info", "print the system parameters");
  common(info);

  auto* ks_profile = app.add_subcommand("ks-profile", "normalized KS profile N(r) of a touching pair");
  common(ks_profile), engine(ks_profile), grid(ks_profile), cells(ks_profile, false);

  auto* ks_union = app.add_subcommand("ks-union", "KS functional of a cell union and boundary-count recovery");
  common(ks_union), engine(ks_union), grid(ks_union), cells(ks_union, true);
  ks_union->add_flag("--direct", cfg.direct, "sum every inside/outside pair instead of boundary pairs");

  auto* ks_osc = app.add_subcommand("ks-oscillation", "certify that N(r) is not constant");
  common(ks_osc), engine(ks_osc), grid(ks_osc), cells(ks_osc, false);

  auto* ks_limits = app.add_subcommand("ks-limits", "N along two phase classes r = s diam L^-m");
  common(ks_limits), engine(ks_limits), cells(ks_limits, false);
  ks_limits->add_option("--periods", cfg.periods, "number of levels m per phase");

  auto* heat_profile = app.add_subcommand("heat-profile", "rescaled heat functional of a union and its fold");
  common(heat_profile), grid(heat_profile), cells(heat_profile, true);
  heat_profile->add_option("--N", cfg.N, "graph level (<= 9)");
  heat_profile->add_flag("--direct", cfg.direct, "use U against its complement instead of boundary pairs");
  heat_profile->add_option("--bins", cfg.bins, "fold bins (0 = detect)");

  auto* heat_scale = app.add_subcommand("heat-scalecheck", "heat pair scaling under a similitude");
  common(heat_scale), grid(heat_scale), cells(heat_scale, false);
  heat_scale->add_option("--N", cfg.N, "graph level of the left side");
  heat_scale->add_option("--n", cfg.n, "number of map applications");
  heat_scale->add_flag("--window-graph", cfg.window_graph, "use the full window graph on the right side");

  auto* hit = app.add_subcommand("hit-tail", "Monte Carlo exit-probability tail");
  common(hit), cells(hit, true);
  hit->add_option("--N", cfg.N, "graph level (<= 9)");
  hit->add_option("--samples", cfg.samples, "walks per time point");
  hit->add_option("--points", cfg.points, "number of time points");
  hit->add_option("--grid-start", cfg.grid_start, "smallest time");
  hit->add_option("--grid-stop", cfg.grid_stop, "largest time");
  hit->add_option("--start", cfg.start, "start point x,y (default: vertex nearest the union centre)");

  auto* fold_cmd = app.add_subcommand("fold", "fold a curve CSV onto one period of its log abscissa");
  common(fold_cmd);
  fold_cmd->add_option("--input", cfg.input, "curve CSV")->check(CLI::ExistingFile);
  fold_cmd->add_option("--period", cfg.period, "additive period in -ln x");
  fold_cmd->add_option("--gamma", cfg.gamma, "power-law exponent removed before folding");
  fold_cmd->add_option("--bins", cfg.bins, "bins (0 = detect)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 1;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();

  try {
    cfg.validate();
    if (cfg.subcommand == "info") return cmd_info(cfg, out);
    if (cfg.subcommand == "ks-profile") return cmd_ks_profile(cfg, out, false);
    if (cfg.subcommand == "ks-oscillation") return cmd_ks_profile(cfg, out, true);
    if (cfg.subcommand == "ks-union") return cmd_ks_union(cfg, out);
    if (cfg.subcommand == "ks-limits") return cmd_ks_limits(cfg, out);
    if (cfg.subcommand == "heat-profile") return cmd_heat_profile(cfg, out);
    if (cfg.subcommand == "heat-scalecheck") return cmd_heat_scalecheck(cfg, out);
    if (cfg.subcommand == "hit-tail") return cmd_hit_tail(cfg, out);
    if (cfg.subcommand == "fold") return cmd_fold(cfg, out);
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 1;
}

}  // namespace fbv::cli
