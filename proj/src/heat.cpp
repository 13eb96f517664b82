#include "fbv/heat.hpp"

#include "fbv/errors.hpp"
#include "fbv/measure.hpp"
#include "fbv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

namespace fbv {

namespace {

// Visits the vertex ids of every level-N cell below `cell`.
template <class Fn>
void for_each_cell_vertices(const FractalSystem& sys, const WalkOperator& walk, const Cell& cell, Fn&& fn) {
  if (cell.level() > walk.level) throw PreconditionError("cell is finer than the walk level");
  std::vector<int> ids(sys.vertex_count());
  std::function<void(const Affine&, int)> visit = [&](const Affine& a, int depth) {
    if (depth == 0) {
      for (std::size_t k = 0; k < sys.vertex_count(); ++k) {
        ids[k] = walk.index.find(a.apply(sys.essential_vertices[k]));
        if (ids[k] < 0) throw PreconditionError("cell lies outside the walk's graph");
      }
      fn(ids);
      return;
    }
    for (const auto& m : sys.maps) visit(a.compose(m.affine()), depth - 1);
  };
  visit(cell_affine(sys, cell), walk.level - cell.level());
}

std::vector<double> propagate_weights(const WalkOperator& walk, std::vector<double> v, int steps,
                                      const std::vector<char>* alive) {
  std::vector<double> scratch(v.size());
  if (alive) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!(*alive)[i]) v[i] = 0.0;
  }
  for (int s = 0; s < steps; ++s) {
    if (alive) {
      walk.step_killed(v, scratch, *alive);
    } else {
      walk.step(v, scratch);
    }
  }
  return v;
}

double pair_against(const WalkOperator& walk, const std::vector<double>& v, const std::vector<double>& weights_b) {
  double sum = 0.0;
  for (std::size_t y = 0; y < v.size(); ++y)
    if (weights_b[y] != 0.0) sum += v[y] * weights_b[y] / walk.pi[y];
  return sum;
}

}  // namespace

void WalkOperator::step(std::vector<double>& v, std::vector<double>& scratch) const {
  const std::size_t n = v.size();
  if (scratch.size() < n) scratch.resize(n);
  // scratch holds v / (2 deg) in full before v is overwritten.
  for (std::size_t x = 0; x < n; ++x) scratch[x] = v[x] / (2.0 * graph.degree(static_cast<int>(x)));
  for (std::size_t y = 0; y < n; ++y) {
    double acc = 0.5 * v[y];
    for (int x : graph.adjacent(static_cast<int>(y))) acc += scratch[x];
    v[y] = acc;
  }
}

void WalkOperator::step_killed(std::vector<double>& v, std::vector<double>& scratch,
                               const std::vector<char>& alive) const {
  step(v, scratch);
  for (std::size_t y = 0; y < v.size(); ++y)
    if (!alive[y]) v[y] = 0.0;
}

WalkOperator build_walk(const FractalSystem& sys, std::span<const Cell> roots, int N, std::size_t cap) {
  if (N < 0) throw PreconditionError("walk level must be >= 0");
  WalkOperator w;
  w.graph = vertex_graph(sys, roots, N, cap);
  w.level = N;
  w.time_unit = std::pow(sys.L, -N * sys.d_w);
  w.cell_weight = std::pow(static_cast<double>(sys.M), -N) / static_cast<double>(sys.vertex_count());
  w.pi.resize(w.graph.vertex_total());
  for (std::size_t v = 0; v < w.pi.size(); ++v) w.pi[v] = w.graph.cell_count[v] * w.cell_weight;
  w.index = PointIndex(sys.vertex_tolerance(N));
  for (const auto& p : w.graph.vertices) w.index.insert(p);
  if (!w.graph.connected()) throw InvariantViolation("vertex graph is not connected");
  return w;
}

WalkOperator build_walk(const FractalSystem& sys, int N, std::size_t cap) {
  const auto roots = cells_at_level(sys, 0, cap);
  return build_walk(sys, roots, N, cap);
}

int steps_for(const WalkOperator& walk, double t) {
  const double k = std::round(t / walk.time_unit);
  if (!(k >= 1.0))
    throw PreconditionError("time " + std::to_string(t) + " is below one walk step; increase the graph level");
  if (k > 1e9) throw PreconditionError("time needs more than 1e9 walk steps; lower the graph level");
  return static_cast<int>(k);
}

std::vector<double> set_weights(const FractalSystem& sys, const WalkOperator& walk, std::span<const Cell> cells) {
  std::vector<double> w(walk.size(), 0.0);
  for (const auto& c : cells)
    for_each_cell_vertices(sys, walk, c, [&](const std::vector<int>& ids) {
      for (int id : ids) w[id] += walk.cell_weight;
    });
  return w;
}

KernelSlice kernel_slice(const WalkOperator& walk, const std::vector<int>& sources, const std::vector<int>& targets,
                         int steps, const std::vector<char>* alive) {
  KernelSlice out{sources, targets, steps, {}, {}, {}};
  out.values.resize(sources.size() * targets.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    std::vector<double> v(walk.size(), 0.0);
    v[sources[i]] = 1.0;
    v = propagate_weights(walk, std::move(v), steps, alive);
    for (std::size_t j = 0; j < targets.size(); ++j) out.values[i * targets.size() + j] = v[targets[j]] / walk.pi[targets[j]];
    out.pi_sources.push_back(walk.pi[sources[i]]);
  }
  for (int y : targets) out.pi_targets.push_back(walk.pi[y]);
  return out;
}

double heat_pair_steps(const WalkOperator& walk, const std::vector<double>& weights_a,
                       const std::vector<double>& weights_b, int steps, const std::vector<char>* alive) {
  const auto v = propagate_weights(walk, weights_a, steps, alive);
  return pair_against(walk, v, weights_b);
}

double heat_pair(const FractalSystem& sys, const WalkOperator& walk, std::span<const Cell> A, std::span<const Cell> B,
                 double t) {
  const int k = steps_for(walk, t);
  return heat_pair_steps(walk, set_weights(sys, walk, A), set_weights(sys, walk, B), k);
}

double heat_pair(const FractalSystem& sys, const WalkOperator& walk, const Cell& A, const Cell& B, double t) {
  return heat_pair(sys, walk, std::span(&A, 1), std::span(&B, 1), t);
}

Curve HeatCurve::rescaled_curve() const {
  Curve c;
  c.scale = Abscissa::time;
  c.normalization = "t^{-d_h/d_w} M_U(t)";
  for (const auto& s : samples) c.samples.push_back({s.t, s.rescaled, s.rescaled});
  return c;
}

HeatCurve heat_union(const FractalSystem& sys, const WalkOperator& walk, const CellUnion& U,
                     const std::vector<double>& t_grid, bool direct, unsigned threads) {
  HeatCurve out;
  for (double t : t_grid) out.samples.push_back({t, steps_for(walk, t), 0.0, 0.0});
  if (U.empty()) return out;

  // Each source set is propagated once through the sorted step counts.
  std::vector<std::size_t> order(t_grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out.samples[a].steps < out.samples[b].steps; });

  std::vector<std::pair<std::vector<double>, std::vector<double>>> jobs;
  if (direct) {
    auto inside = set_weights(sys, walk, U.cells());
    std::vector<double> outside(walk.size());
    for (std::size_t v = 0; v < outside.size(); ++v) outside[v] = walk.pi[v] - inside[v];
    jobs.emplace_back(std::move(inside), std::move(outside));
  } else {
    for (const auto& p : boundary_pairs(sys, U))
      jobs.emplace_back(set_weights(sys, walk, std::span(&p.inside, 1)), set_weights(sys, walk, std::span(&p.outside, 1)));
  }
  std::vector<std::vector<double>> values(jobs.size(), std::vector<double>(t_grid.size(), 0.0));
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    std::vector<double> v = jobs[j].first, scratch(v.size());
    int done = 0;
    for (std::size_t idx : order) {
      while (done < out.samples[idx].steps) {
        walk.step(v, scratch);
        ++done;
      }
      values[j][idx] = pair_against(walk, v, jobs[j].second);
    }
  });
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    double sum = 0.0;
    for (const auto& row : values) sum += row[i];
    out.samples[i].value = 2.0 * sum;
    out.samples[i].rescaled = out.samples[i].value * std::pow(t_grid[i], -sys.d_h / sys.d_w);
  }
  return out;
}

std::vector<char> halo_vertices(const FractalSystem& sys, const WalkOperator& walk, std::span<const Cell> cells,
                                double r_halo) {
  std::vector<Vec2> seeds;
  std::vector<char> member(walk.size(), 0);
  for (const auto& c : cells)
    for_each_cell_vertices(sys, walk, c, [&](const std::vector<int>& ids) {
      for (int id : ids) member[id] = 1;
    });
  for (std::size_t v = 0; v < member.size(); ++v)
    if (member[v]) seeds.push_back(walk.graph.vertices[v]);

  // Bucket the seed vertices on a grid of spacing r_halo.
  const double cell = std::max(r_halo, 1e-12);
  auto bucket = [&](Vec2 p) {
    return std::pair<long, long>{static_cast<long>(std::floor(p.x / cell)), static_cast<long>(std::floor(p.y / cell))};
  };
  std::unordered_map<std::uint64_t, std::vector<Vec2>> grid;
  auto key = [](long bx, long by) { return (static_cast<std::uint64_t>(bx) << 32) ^ static_cast<std::uint32_t>(by); };
  for (const auto& s : seeds) {
    const auto [bx, by] = bucket(s);
    grid[key(bx, by)].push_back(s);
  }
  std::vector<char> alive(walk.size(), 0);
  std::size_t count = 0;
  for (std::size_t v = 0; v < walk.size(); ++v) {
    const Vec2 p = walk.graph.vertices[v];
    const auto [bx, by] = bucket(p);
    for (long dx = -1; dx <= 1 && !alive[v]; ++dx)
      for (long dy = -1; dy <= 1 && !alive[v]; ++dy) {
        auto it = grid.find(key(bx + dx, by + dy));
        if (it == grid.end()) continue;
        for (const auto& s : it->second)
          if (distance(s, p) <= r_halo) {
            alive[v] = 1;
            break;
          }
      }
    count += alive[v] ? 1 : 0;
  }
  if (count < walk.size()) {
    for (const auto& wv : sys.window_vertices()) {
      if (norm(wv) == 0.0) continue;
      const int id = walk.index.find(wv);
      if (id >= 0 && alive[id])
        throw WindowTooSmall("halo reaches a window attachment point; rebuild with a larger window level");
    }
  }
  return alive;
}

double dirichlet_heat_pair(const FractalSystem& sys, const WalkOperator& walk, const Cell& A, const Cell& B,
                           double r_halo, double t) {
  const int k = steps_for(walk, t);
  const std::vector<Cell> both{A, B};
  const auto alive = halo_vertices(sys, walk, both, r_halo);
  return heat_pair_steps(walk, set_weights(sys, walk, std::span(&A, 1)), set_weights(sys, walk, std::span(&B, 1)), k,
                         &alive);
}

HeatScalingCheck scaling_check_heat(const FractalSystem& sys, const Cell& A, const Cell& B, double t, int n, int N,
                                    int psi_map, bool isomorphic) {
  if (n < 1) throw PreconditionError("scaling check needs n >= 1");
  if (psi_map < 1 || psi_map > sys.M) throw PreconditionError("map index out of range");
  HeatScalingCheck out;
  const WalkOperator left = build_walk(sys, N);
  out.steps_lhs = steps_for(left, t);
  out.lhs = heat_pair(sys, left, A, B, t);

  Cell a = A, b = B;
  std::vector<Cell> roots = cells_at_level(sys, 0);
  for (int i = 0; i < n; ++i) {
    a = a.mapped(psi_map);
    b = b.mapped(psi_map);
    for (auto& r : roots) r = r.mapped(psi_map);
  }
  const WalkOperator right = isomorphic ? build_walk(sys, roots, N + n) : build_walk(sys, N + n);
  const double t_right = t * std::pow(sys.L, -n * sys.d_w);
  out.steps_rhs = steps_for(right, t_right);
  const auto wa = set_weights(sys, right, std::span(&a, 1));
  const auto wb = set_weights(sys, right, std::span(&b, 1));
  const double factor = std::pow(static_cast<double>(sys.M), n);
  out.rhs = factor * heat_pair_steps(right, wa, wb, out.steps_rhs);
  out.residual = out.lhs != 0.0 ? std::abs(out.lhs - out.rhs) / std::abs(out.lhs) : std::abs(out.rhs);
  for (int dk : {-1, 1}) {
    if (out.steps_rhs + dk < 1) continue;
    const double v = factor * heat_pair_steps(right, wa, wb, out.steps_rhs + dk);
    if (out.rhs != 0.0) out.sensitivity = std::max(out.sensitivity, std::abs(v - out.rhs) / std::abs(out.rhs));
  }
  return out;
}

HittingTail hitting_tail_mc(const FractalSystem& sys, const WalkOperator& walk, const CellUnion& U, Vec2 x,
                            const std::vector<double>& t_grid, std::uint64_t samples, std::uint64_t seed,
                            unsigned threads) {
  if (U.empty()) throw PreconditionError("hitting tail needs a nonempty union");
  if (t_grid.empty()) throw PreconditionError("hitting tail needs at least one time");
  // Interior vertices: vertices of U's cells that are not boundary points.
  std::vector<char> interior(walk.size(), 0);
  for (const auto& c : U.cells())
    for_each_cell_vertices(sys, walk, c, [&](const std::vector<int>& ids) {
      for (int id : ids) interior[id] = 1;
    });
  for (const auto& p : boundary_points(sys, U)) {
    const int id = walk.index.find(p);
    if (id >= 0) interior[id] = 0;
  }
  HittingTail out;
  out.start_vertex = walk.index.find(x);
  if (out.start_vertex < 0) throw PreconditionError("start point is not a vertex of the walk graph");
  bool inside_u = false;
  for (const auto& c : U.cells())
    for_each_cell_vertices(sys, walk, c, [&](const std::vector<int>& ids) {
      for (int id : ids) inside_u = inside_u || id == out.start_vertex;
    });
  if (!inside_u) throw PreconditionError("start point lies outside U");

  out.distance_to_complement = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < walk.size(); ++v)
    if (!interior[v])
      out.distance_to_complement =
          std::min(out.distance_to_complement, distance(walk.graph.vertices[v], walk.graph.vertices[out.start_vertex]));

  std::vector<int> steps;
  for (double t : t_grid) steps.push_back(steps_for(walk, t));
  const int k_max = *std::max_element(steps.begin(), steps.end());

  // exit_hist[k] counts walks whose first exit happens at step k (k = 0 when starting outside the interior).
  constexpr std::uint64_t kChunk = 1 << 12;
  const std::uint64_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<std::vector<std::uint64_t>> hist(chunks, std::vector<std::uint64_t>(k_max + 1, 0));
  const int start = out.start_vertex;
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::mt19937_64 rng(derive_seed(seed, c));
    const std::uint64_t n = std::min<std::uint64_t>(kChunk, samples - c * kChunk);
    for (std::uint64_t s = 0; s < n; ++s) {
      int v = start;
      if (!interior[v]) {
        ++hist[c][0];
        continue;
      }
      for (int k = 1; k <= k_max; ++k) {
        const std::uint64_t u = rng();
        if (u & 1ULL) {
          const auto adj = walk.graph.adjacent(v);
          v = adj[(u >> 1) % adj.size()];
          if (!interior[v]) {
            ++hist[c][k];
            break;
          }
        }
      }
    }
  });
  std::vector<std::uint64_t> cumulative(k_max + 1, 0);
  for (int k = 0; k <= k_max; ++k) {
    for (const auto& h : hist) cumulative[k] += h[k];
    if (k > 0) cumulative[k] += cumulative[k - 1];
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    HittingPoint p;
    p.t = t_grid[i];
    p.steps = steps[i];
    p.samples = samples;
    p.exits = cumulative[steps[i]];
    p.probability = static_cast<double>(p.exits) / static_cast<double>(samples);
    if (p.exits == 0) {
      p.upper_only = true;
      p.ci_hi = 1.0 - std::pow(0.025, 1.0 / static_cast<double>(samples));
    } else {
      std::tie(p.ci_lo, p.ci_hi) = wilson_interval(p.exits, samples, kZ95);
    }
    const double scaled = std::pow(std::pow(out.distance_to_complement, sys.d_w) / p.t, 1.0 / (sys.d_w - 1.0));
    out.scaled_distance.push_back(scaled);
    if (p.exits > 0) {
      xs.push_back(scaled);
      ys.push_back(std::log(p.probability));
    }
    out.points.push_back(p);
  }
  if (xs.size() >= 2) out.fit = linear_fit(xs, ys);
  return out;
}

PhiProfile phi_profile(const FractalSystem& sys, const HeatCurve& curve, int boundary_count, int bins) {
  PhiProfile out;
  Curve phi;
  phi.scale = Abscissa::time;
  phi.normalization = "|dU| / (t^{-d_h/d_w} M_U(t))";
  for (const auto& s : curve.samples) {
    if (!(s.rescaled > 0.0)) throw PreconditionError("heat curve must be positive to form Phi");
    const double v = boundary_count / s.rescaled;
    phi.samples.push_back({s.t, v, v});
  }
  out.phi = to_log_frame(phi, 0.0);
  out.folded = fold(out.phi, sys.d_w * std::log(sys.L), bins);
  return out;
}

double besov_seminorm_probe(const FractalSystem& sys, const WalkOperator& walk, const CellUnion& U,
                            const std::vector<double>& t_grid, unsigned threads) {
  if (U.empty()) return 0.0;
  double sup = 0.0;
  for (const auto& s : heat_union(sys, walk, U, t_grid, false, threads).samples) sup = std::max(sup, s.rescaled);
  return sup;
}

double EnvelopeFit::ratio() const { return std::exp(upper_intercept - lower_intercept); }

EnvelopeFit fit_subgaussian_envelope(const std::vector<double>& scaled_distance, const std::vector<double>& log_values) {
  const LinearFit f = linear_fit(scaled_distance, log_values);
  EnvelopeFit out;
  out.rate = -f.slope;
  out.lower_intercept = std::numeric_limits<double>::infinity();
  out.upper_intercept = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scaled_distance.size(); ++i) {
    const double b = log_values[i] + out.rate * scaled_distance[i];
    out.lower_intercept = std::min(out.lower_intercept, b);
    out.upper_intercept = std::max(out.upper_intercept, b);
  }
  return out;
}

}  // namespace fbv
