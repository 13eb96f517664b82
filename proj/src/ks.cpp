#include "fbv/ks.hpp"

#include "fbv/errors.hpp"
#include "fbv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace fbv {

namespace {

Cell lift(const Cell& c, int window_level) {
  Word w(static_cast<std::size_t>(window_level - c.window_level()), 1);
  w.insert(w.end(), c.word().begin(), c.word().end());
  return Cell(std::move(w), window_level);
}

double touching_reach(const FractalSystem& sys, int level) { return sys.vertex_tolerance(level); }

// The cell of the given level whose centre is `point`.
Cell find_cell(const FractalSystem& sys, int level, Vec2 point) {
  const double tol = 1e-9;
  Word w;
  std::optional<Cell> found;
  const int total = sys.window_level + level;
  std::function<void(const Affine&, double)> visit = [&](const Affine& a, double scale) {
    if (found) return;
    if (distance(a.apply(sys.center), point) > sys.radius * scale + tol) return;
    if (static_cast<int>(w.size()) == total) {
      if (distance(a.apply(sys.center), point) <= tol) found = Cell(w, sys.window_level);
      return;
    }
    for (int i = 0; i < sys.M; ++i) {
      w.push_back(i + 1);
      visit(a.compose(sys.maps[i].affine()), scale / sys.L);
      w.pop_back();
    }
  };
  visit(sys.window_affine(), std::pow(sys.L, sys.window_level));
  if (!found)
    throw WindowTooSmall("no level-" + std::to_string(level) + " cell centred at (" + std::to_string(point.x) + ", " +
                         std::to_string(point.y) + ") in this window");
  return *found;
}

bool inside_polygon(const std::vector<Vec2>& poly, Vec2 p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    if ((poly[i].y > p.y) != (poly[j].y > p.y) &&
        p.x < (poly[j].x - poly[i].x) * (p.y - poly[i].y) / (poly[j].y - poly[i].y) + poly[i].x)
      in = !in;
  }
  return in;
}

// m * factor * r^{-times d_h}, widened by a bound on the error of the power.
MassInterval scale_pow(const MassInterval& m, const FractalSystem& sys, double r, double times, double factor = 1.0) {
  const double e = -times * sys.d_h;
  const double rel = (2.0 + std::abs(e * std::log(r))) * 4.0 * std::numeric_limits<double>::epsilon();
  return m.scaled(factor * std::pow(r, e), rel);
}

struct UnionPlan {
  std::vector<BoundaryPair> pairs;
  double threshold = 0.0;
};

MassInterval union_mass_direct(const FractalSystem& sys, const CellUnion& U, double r, const EngineOptions& opts) {
  const FractalSystem lifted = sys.with_window(sys.window_level + 1);
  std::vector<Cell> inside;
  for (const auto& c : U.cells()) inside.push_back(lift(c, lifted.window_level));
  const CellUnion lifted_U(inside);
  // The r-neighbourhood of U must stay clear of the lifted window's attachment points.
  for (const auto& v : lifted.window_vertices()) {
    if (norm(v) == 0.0) continue;
    for (const auto& c : inside) {
      const auto ball = cell_bounding_ball(lifted, c);
      if (distance(ball.center, v) - ball.radius <= r)
        throw WindowTooSmall("radius reaches the edge of the enlarged window; rebuild with a larger window level");
    }
  }
  std::vector<Cell> outside;
  for (const auto& c : cells_near(lifted, U.level(), inside, r)) {
    if (!lifted_U.contains(c)) outside.push_back(c);
  }
  return pair_mass(lifted, lifted_U, CellUnion(outside), r, opts);
}

MassInterval union_mass_pairs(const FractalSystem& sys, const std::vector<BoundaryPair>& pairs, double r,
                              const EngineOptions& opts) {
  MassInterval out;
  for (const auto& p : pairs) out += pair_mass(sys, p.inside, p.outside, r, opts);
  return out;
}

MassInterval ks_union_with(const FractalSystem& sys, const CellUnion& U, const UnionPlan& plan, double r,
                           const EngineOptions& opts, bool direct) {
  if (U.empty()) return {};
  MassInterval g;
  if (direct) {
    g = union_mass_direct(sys, U, r, opts);
  } else {
    if (r > plan.threshold)
      throw ThresholdExceeded("radius " + std::to_string(r) + " exceeds the decomposition threshold " +
                              std::to_string(plan.threshold) + "; use direct evaluation");
    g = union_mass_pairs(sys, plan.pairs, r, opts);
  }
  // |1_U(x) - 1_U(y)| counts each inside/outside pair in both orders; the engine is exactly symmetric.
  return scale_pow(g, sys, r, 1.0, 2.0);
}

UnionPlan plan_union(const FractalSystem& sys, const CellUnion& U, bool direct) {
  UnionPlan plan;
  if (U.empty()) return plan;
  plan.pairs = boundary_pairs(sys, U);
  plan.threshold = direct ? std::numeric_limits<double>::infinity() : union_threshold(sys, U);
  return plan;
}

}  // namespace

std::vector<double> geometric_grid(double start, double factor, int per_period, int periods) {
  if (!(start > 0.0) || !(factor > 1.0) || per_period < 1 || periods < 1)
    throw PreconditionError("grid needs start > 0, factor > 1 and positive counts");
  std::vector<double> out;
  for (int q = 0; q < periods; ++q) {
    const double base = start * std::pow(factor, -q);
    for (int j = 0; j < per_period; ++j)
      out.push_back(base * std::pow(factor, -static_cast<double>(j) / per_period));
  }
  return out;
}

std::vector<double> geometric_grid_between(double start, double stop, double factor, int per_period) {
  if (!(stop > 0.0) || !(stop < start)) throw PreconditionError("grid needs 0 < stop < start");
  const double steps = std::log(start / stop) / std::log(factor) * per_period;
  const int count = static_cast<int>(std::floor(steps + 1e-9)) + 1;
  std::vector<double> out;
  for (int j = 0; j < count; ++j) {
    const int q = j / per_period, f = j % per_period;
    out.push_back(start * std::pow(factor, -q) * std::pow(factor, -static_cast<double>(f) / per_period));
  }
  return out;
}

MassInterval ks_pair(const FractalSystem& sys, const Cell& A, const Cell& B, double r, const EngineOptions& opts) {
  return scale_pow(pair_mass(sys, A, B, r, opts), sys, r, 1.0);
}

std::pair<Cell, Cell> touching_children(const FractalSystem& sys, const Cell& A, const Cell& B) {
  const auto p = shared_point(sys, A, B);
  if (!p) throw PreconditionError("cells " + format_word(A.word()) + " and " + format_word(B.word()) + " do not touch");
  const double tol = sys.vertex_tolerance(A.level() + 1);
  auto child_at = [&](const Cell& parent) {
    for (int i = 1; i <= sys.M; ++i) {
      const Cell c = parent.child(i);
      for (const auto& v : cell_vertices(sys, c))
        if (std::abs(v.x - p->x) <= tol && std::abs(v.y - p->y) <= tol) return c;
    }
    throw InvariantViolation("shared vertex is not a vertex of any child");
  };
  return {child_at(A), child_at(B)};
}

double localization_threshold(const FractalSystem& sys, const Cell& A, const Cell& B) {
  const auto [a_star, b_star] = touching_children(sys, A, B);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= sys.M; ++i) {
    for (int j = 1; j <= sys.M; ++j) {
      const Cell a = A.child(i), b = B.child(j);
      if (a == a_star && b == b_star) continue;
      best = std::min(best, cell_distance(sys, a, b, 6).lo);
    }
  }
  return 0.5 * best;
}

double union_threshold(const FractalSystem& sys, const CellUnion& U) {
  if (U.empty()) return std::numeric_limits<double>::infinity();
  const FractalSystem lifted = sys.with_window(sys.window_level + 1);
  std::vector<Cell> inside;
  for (const auto& c : U.cells()) inside.push_back(lift(c, lifted.window_level));
  const CellUnion lifted_U(inside);
  const double reach = 2.0 * sys.diam * std::pow(sys.L, -U.level());
  double best = reach;
  const auto near = cells_near(lifted, U.level(), inside, reach);
  const double tol = touching_reach(lifted, U.level());
  for (const auto& in : inside) {
    const auto in_ball = cell_bounding_ball(lifted, in);
    for (const auto& out : near) {
      if (lifted_U.contains(out)) continue;
      const auto out_ball = cell_bounding_ball(lifted, out);
      if (distance(in_ball.center, out_ball.center) - in_ball.radius - out_ball.radius > best) continue;
      if (shared_point(lifted, in, out)) continue;
      (void)tol;
      best = std::min(best, cell_distance(lifted, in, out, 6).lo);
    }
  }
  return 0.5 * best;
}

MassInterval ks_union(const FractalSystem& sys, const CellUnion& U, double r, const EngineOptions& opts, bool direct) {
  if (!(r > 0.0)) throw PreconditionError("radius must be positive");
  return ks_union_with(sys, U, plan_union(sys, U, direct), r, opts, direct);
}

Curve normalized_profile(const FractalSystem& sys, const Cell& A, const Cell& B, const std::vector<double>& grid,
                         const EngineOptions& opts, unsigned threads) {
  Curve curve;
  curve.scale = Abscissa::radius;
  curve.normalization = "r^{-2 d_h} G_{A,B}(r)";
  curve.samples.resize(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const double r = grid[i];
    const MassInterval n = scale_pow(pair_mass(sys, A, B, r, opts), sys, r, 2.0);
    curve.samples[i] = {r, n.lo, n.hi};
  });
  return curve;
}

Curve normalized_profile(const FractalSystem& sys, const CellUnion& U, const std::vector<double>& grid,
                         const EngineOptions& opts, unsigned threads, bool direct) {
  const UnionPlan plan = plan_union(sys, U, direct);
  Curve curve;
  curve.scale = Abscissa::radius;
  curve.normalization = "r^{-d_h} M_U(r)";
  curve.samples.resize(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const double r = grid[i];
    const MassInterval n = scale_pow(ks_union_with(sys, U, plan, r, opts, direct), sys, r, 1.0);
    curve.samples[i] = {r, n.lo, n.hi};
  });
  return curve;
}

PeriodicityReport periodicity_check(const Curve& curve, double factor) {
  PeriodicityReport out;
  for (const auto& a : curve.samples) {
    for (const auto& b : curve.samples) {
      if (std::abs(b.x - a.x * factor) > 1e-9 * b.x) continue;
      ++out.comparisons;
      const double gap = std::max(0.0, std::max(a.lo, b.lo) - std::min(a.hi, b.hi));
      if (gap > out.max_residual) {
        out.max_residual = gap;
        out.offending_x = b.x;
      }
    }
  }
  return out;
}

OscillationReport oscillation_amplitude(const Curve& curve, double period_log) {
  OscillationReport out;
  out.period_log = period_log;
  if (curve.samples.empty()) return out;
  double max_lo = -std::numeric_limits<double>::infinity(), min_hi = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& s : curve.samples) {
    if (s.lo > max_lo) {
      max_lo = s.lo;
      out.x_of_max = s.x;
    }
    if (s.hi < min_hi) {
      min_hi = s.hi;
      out.x_of_min = s.x;
    }
    out.interval_width_max = std::max(out.interval_width_max, s.width());
    sum += s.mid();
  }
  out.mean = sum / static_cast<double>(curve.samples.size());
  out.amplitude = std::max(0.0, max_lo - min_hi);
  out.certified = out.amplitude > 5.0 * out.interval_width_max;
  if (period_log > 0.0) out.max_periodicity_residual = periodicity_check(curve, std::exp(period_log)).max_residual;
  return out;
}

std::vector<double> standard_phases(const FractalSystem& sys) { return {1.0, (1.0 + 1.0 / sys.L) / sys.L}; }

SubsequenceReport subsequence_limits(const FractalSystem& sys, const Cell& A, const Cell& B,
                                     const std::vector<double>& phases, const std::vector<int>& levels,
                                     const EngineOptions& opts, unsigned threads) {
  if (phases.empty() || levels.empty()) throw PreconditionError("need at least one phase and one level");
  const double limit = sys.L * localization_threshold(sys, A, B);
  SubsequenceReport out;
  struct Job {
    std::size_t phase, level;
    double r;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < phases.size(); ++p) {
    const double s = phases[p];
    if (!(s > 1.0 / sys.L - 1e-15 && s <= 1.0 + 1e-15)) throw PreconditionError("phase must lie in (1/L, 1]");
    for (std::size_t m = 0; m < levels.size(); ++m) {
      const double r = s * sys.diam * std::pow(sys.L, -levels[m]);
      if (r > limit)
        throw ThresholdExceeded("radius " + std::to_string(r) + " for phase " + std::to_string(s) +
                                " lies above the periodic range " + std::to_string(limit));
      jobs.push_back({p, m, r});
    }
  }
  std::vector<MassInterval> values(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    values[i] = scale_pow(pair_mass(sys, A, B, jobs[i].r, opts), sys, jobs[i].r, 2.0);
  });
  for (std::size_t p = 0; p < phases.size(); ++p) {
    PhaseSequence seq;
    seq.phase = phases[p];
    seq.common = {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].phase != p) continue;
      seq.levels.push_back(levels[jobs[i].level]);
      seq.radii.push_back(jobs[i].r);
      seq.values.push_back(values[i]);
      seq.common.lo = std::max(seq.common.lo, values[i].lo);
      seq.common.hi = std::min(seq.common.hi, values[i].hi);
    }
    out.phases.push_back(std::move(seq));
  }
  for (std::size_t a = 0; a < out.phases.size(); ++a)
    for (std::size_t b = a + 1; b < out.phases.size(); ++b) {
      const auto& x = out.phases[a].common;
      const auto& y = out.phases[b].common;
      if (x.lo <= x.hi && y.lo <= y.hi && (x.hi < y.lo || y.hi < x.lo)) out.disjoint = true;
    }

  const int m = *std::max_element(levels.begin(), levels.end());
  const double r1 = sys.diam * std::pow(sys.L, -m);
  const MassInterval g1 = pair_mass(sys, A, B, r1, opts);
  const MassInterval g2 = pair_mass(sys, A, B, r1 * (1.0 + 1.0 / sys.L), opts);
  out.measured_ratio = {g1.hi > 0 ? g2.lo / g1.hi : 0.0,
                        g1.lo > 0 ? g2.hi / g1.lo : std::numeric_limits<double>::infinity()};
  out.predicted_ratio = 1.0 + sys.R / static_cast<double>(sys.M);
  out.matches_prediction = out.measured_ratio.contains(out.predicted_ratio);
  return out;
}

RecoveryReport boundary_recovery(const FractalSystem& sys, const CellUnion& U, double r, const EngineOptions& opts) {
  RecoveryReport out;
  out.boundary_count = static_cast<int>(boundary_points(sys, U).size());
  const auto [a, b] = reference_pair(sys);
  const double periodic_limit = std::pow(sys.L, 2 - U.level()) * localization_threshold(sys, a, b);
  if (r > periodic_limit)
    throw ThresholdExceeded("radius " + std::to_string(r) + " lies above the reference pair's periodic range " +
                            std::to_string(periodic_limit));
  const MassInterval n_union = scale_pow(ks_union(sys, U, r, opts), sys, r, 1.0);
  const MassInterval n_ref = scale_pow(pair_mass(sys, a, b, r, opts), sys, r, 2.0);
  if (!(n_ref.lo > 0.0)) throw InvariantViolation("reference profile is not resolved at this radius");
  out.estimate = {div_down(n_union.lo, 2.0 * n_ref.hi), div_up(n_union.hi, 2.0 * n_ref.lo), n_union.depth_reached,
                  n_union.pairs_visited + n_ref.pairs_visited};
  const long first = static_cast<long>(std::ceil(out.estimate.lo));
  const long last = static_cast<long>(std::floor(out.estimate.hi));
  out.integers_inside = static_cast<int>(std::max(0L, last - first + 1));
  if (out.integers_inside == 0)
    throw InvariantViolation("boundary estimate [" + std::to_string(out.estimate.lo) + ", " +
                             std::to_string(out.estimate.hi) + "] contains no integer");
  return out;
}

Curve psi_profile(const Curve& curve) {
  Curve out;
  out.scale = Abscissa::log;
  out.normalization = "1 / (2 N(e^{-z}))";
  for (const auto& s : curve.samples) {
    if (!(s.lo > 0.0))
      throw PreconditionError("profile is not bounded away from zero at x = " + std::to_string(s.x));
    out.samples.push_back({-std::log(s.x), 1.0 / (2.0 * s.hi), 1.0 / (2.0 * s.lo)});
  }
  return out;
}

CellUnion example_union(const FractalSystem& sys, const std::string& name) {
  const bool gasket = sys.name == "sierpinski";
  if (!gasket && sys.name != "vicsek") throw PreconditionError("example unions exist for the presets only");
  const double h = std::sqrt(3.0) / 2.0;
  std::vector<Cell> cells;
  auto centroid = [&](Vec2 a, Vec2 b, Vec2 c) { return (a + b + c) * (1.0 / 3.0); };
  if (gasket) {
    if (name == "single") {
      cells.push_back(find_cell(sys, 1, centroid({0.5, 0}, {1, 0}, {0.75, h / 2})));
    } else if (name == "pair") {
      cells.push_back(find_cell(sys, 1, centroid({0.5, 0}, {1, 0}, {0.75, h / 2})));
      cells.push_back(find_cell(sys, 1, centroid({0.25, h / 2}, {0.75, h / 2}, {0.5, h})));
    } else if (name == "staircase") {
      // A band of quarter-size triangles climbing from the bottom-left corner towards the top.
      const std::vector<Vec2> poly = {{0.125, 0.2165}, {0.875, 1.516}, {1.0, 1.299},   {0.75, 1.299},
                                      {1.0, 0.866},    {1.125, 1.083}, {1.25, 0.866},  {0.5, 0.866},
                                      {0.875, 0.2165}, {0.625, 0.2165}, {0.75, 0.433}, {0.25, 0.433},
                                      {0.375, 0.2165}};
      for (const auto& c : cells_at_level(sys, 2))
        if (inside_polygon(poly, cell_center(sys, c))) cells.push_back(c);
    } else if (name == "mixed") {
      cells.push_back(find_cell(sys, 1, centroid({0.5, 0}, {1, 0}, {0.75, h / 2})));
      cells.push_back(find_cell(sys, 2, centroid({1, 0}, {1.25, 0}, {1.125, h / 4})));
      cells.push_back(find_cell(sys, 2, centroid({1.125, h / 4}, {1.375, h / 4}, {1.25, h / 2})));
    } else {
      throw PreconditionError("unknown example union '" + name + "'");
    }
  } else {
    auto square = [&](int level, double x0, double y0) {
      const double side = std::pow(3.0, -level);
      cells.push_back(find_cell(sys, level, {x0 + side / 2, y0 + side / 2}));
    };
    if (name == "single") {
      square(1, 1.0 / 3, 1.0 / 3);
    } else if (name == "pair") {
      square(1, 1.0 / 3, 1.0 / 3);
      square(1, 2.0 / 3, 2.0 / 3);
    } else if (name == "staircase") {
      square(0, 2, 2);
      square(0, 3, 3);
      square(0, 4, 4);
    } else if (name == "mixed") {
      square(0, 2, 2);
      square(0, 3, 3);
      square(1, 5.0 / 3, 5.0 / 3);
      square(1, 4, 4);
    } else {
      throw PreconditionError("unknown example union '" + name + "'");
    }
  }
  return CellUnion::refined_from(sys, std::move(cells));
}

}  // namespace fbv
