#include "fbv/ifs.hpp"

#include "fbv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <queue>
#include <random>
#include <set>
#include <sstream>

namespace fbv {

namespace {

constexpr double kOrthoTol = 1e-12;

double ipow(double base, int e) {
  double out = 1.0;
  const bool neg = e < 0;
  for (int i = 0; i < std::abs(e); ++i) out *= base;
  return neg ? 1.0 / out : out;
}

struct Ball {
  Vec2 center;
  double radius;
};

Ball ball_of(const FractalSystem& sys, const Affine& a, double scale) {
  return {a.apply(sys.center), sys.radius * scale};
}

double ball_gap(const Ball& a, const Ball& b) { return distance(a.center, b.center) - a.radius - b.radius; }

// Depth-first walk over the cell tree below `prefix`, calling fn on every cell `depth` levels down.
void for_each_descendant(const FractalSystem& sys, Word& word, const Affine& affine, int depth,
                         const std::function<void(const Word&, const Affine&)>& fn) {
  if (depth == 0) {
    fn(word, affine);
    return;
  }
  for (int i = 0; i < sys.M; ++i) {
    word.push_back(i + 1);
    for_each_descendant(sys, word, affine.compose(sys.maps[i].affine()), depth - 1, fn);
    word.pop_back();
  }
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  if (pts.size() < 3) return pts;
  auto cross = [](Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); };
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

bool in_convex_polygon(const std::vector<Vec2>& hull, Vec2 p, double tol) {
  if (hull.size() < 3) return false;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 a = hull[i], b = hull[(i + 1) % hull.size()];
    const Vec2 e = b - a;
    const double c = e.x * (p.y - a.y) - e.y * (p.x - a.x);
    if (c < -tol * norm(e)) return false;
  }
  return true;
}

// Lower bound on the distance from p to the cell with the given affine, by ball refinement.
double point_cell_distance_lb(const FractalSystem& sys, Vec2 p, const Affine& affine, double scale, int depth,
                              double best) {
  const Ball b = ball_of(sys, affine, scale);
  const double gap = std::max(0.0, distance(p, b.center) - b.radius);
  if (gap >= best || depth == 0) return gap;
  double out = best;
  for (int i = 0; i < sys.M; ++i) {
    out = std::min(out, point_cell_distance_lb(sys, p, affine.compose(sys.maps[i].affine()), scale / sys.L,
                                               depth - 1, out));
  }
  return out;
}

Word random_word(std::mt19937_64& rng, int M, int length) {
  std::uniform_int_distribution<int> pick(1, M);
  Word w(length);
  for (auto& s : w) s = pick(rng);
  return w;
}

// Bounding ball of K about `center`: exact hull radius when K lies in conv(V0), else refined bound.
double enclosing_radius(const FractalSystem& sys) {
  const auto hull = convex_hull(sys.essential_vertices);
  bool inside = hull.size() >= 3;
  for (const auto& m : sys.maps) {
    for (const auto& v : sys.essential_vertices) inside = inside && in_convex_polygon(hull, m.apply(v), 1e-12);
  }
  double vertex_radius = 0.0;
  for (const auto& v : sys.essential_vertices) vertex_radius = std::max(vertex_radius, distance(v, sys.center));
  if (inside) return vertex_radius;

  double coarse = 0.0;
  for (const auto& m : sys.maps) coarse = std::max(coarse, distance(m.apply(sys.center), sys.center));
  coarse *= sys.L / (sys.L - 1.0);
  int depth = 0;
  while (ipow(sys.M, depth + 1) <= 1e5) ++depth;
  double refined = 0.0;
  Word w;
  for_each_descendant(sys, w, Affine{}, depth, [&](const Word&, const Affine& a) {
    refined = std::max(refined, distance(a.apply(sys.center), sys.center));
  });
  return std::max(vertex_radius, refined + coarse * ipow(sys.L, -depth));
}

void check_bounding_ball(const FractalSystem& sys) {
  std::mt19937_64 rng(0x5EEDBA11ULL);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p = apply_word(sys, random_word(rng, sys.M, 12), sys.center);
    if (distance(p, sys.center) > sys.radius * (1.0 + 1e-12) + 1e-12)
      throw InvariantViolation("bounding ball of K misses a sampled anchor point");
  }
}

std::vector<Mat2> dihedral(int order) {
  std::vector<Mat2> out;
  for (int k = 0; k < order; ++k) {
    const Mat2 rot = Mat2::rotation(2.0 * std::numbers::pi * k / order);
    out.push_back(rot);
    out.push_back(rot * Mat2{1.0, 0.0, 0.0, -1.0});
  }
  return out;
}

void finalize(FractalSystem& sys) {
  sys.M = static_cast<int>(sys.maps.size());
  sys.d_h = std::log(static_cast<double>(sys.M)) / std::log(sys.L);
  sys.translation_only = std::all_of(sys.maps.begin(), sys.maps.end(), [](const Similitude& s) {
    return std::abs(s.rotation.a - 1.0) < kOrthoTol && std::abs(s.rotation.b) < kOrthoTol &&
           std::abs(s.rotation.c) < kOrthoTol && std::abs(s.rotation.d - 1.0) < kOrthoTol;
  });
  Vec2 c;
  for (const auto& v : sys.essential_vertices) c = c + v;
  sys.center = c * (1.0 / static_cast<double>(sys.essential_vertices.size()));
  sys.radius = enclosing_radius(sys);
  check_bounding_ball(sys);
  sys.R = neighbor_count_R(sys);
}

std::vector<Vec2> cell_vertices_at(const FractalSystem& sys, const Affine& a) {
  std::vector<Vec2> out;
  out.reserve(sys.essential_vertices.size());
  for (const auto& v : sys.essential_vertices) out.push_back(a.apply(v));
  return out;
}

int count_shared(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double tol, Vec2* where) {
  int n = 0;
  for (const auto& p : a) {
    for (const auto& q : b) {
      if (std::abs(p.x - q.x) <= tol && std::abs(p.y - q.y) <= tol) {
        ++n;
        if (where) *where = p;
      }
    }
  }
  return n;
}

// Nested-fractal spot checks on the unit complex K (window level 0).
void validate_nesting(const FractalSystem& sys) {
  // Positive-measure overlap of level-1 cells: sample points of one cell and measure how many
  // sit within a deep-cell distance of the other.
  const double eps = sys.diam * ipow(sys.L, -6);
  std::mt19937_64 rng(0xC0FFEEULL);
  for (int i = 0; i < sys.M; ++i) {
    for (int j = 0; j < sys.M; ++j) {
      if (i == j) continue;
      const Affine bj = sys.maps[j].affine();
      int close = 0;
      constexpr int kSamples = 400;
      for (int s = 0; s < kSamples; ++s) {
        Word w = random_word(rng, sys.M, 10);
        w.insert(w.begin(), i + 1);
        const Vec2 p = apply_word(sys, w, sys.center);
        if (point_cell_distance_lb(sys, p, bj, 1.0 / sys.L, 8, eps * 2.0) <= eps) ++close;
      }
      if (close > kSamples / 10)
        throw AxiomViolation("nesting", "level-1 cells " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                            " overlap on a set of positive measure");
    }
  }

  for (int n = 1; n <= 2; ++n) {
    struct Info {
      Word word;
      std::vector<Vec2> corners;
      std::vector<Vec2> deep_vertices;
    };
    std::vector<Info> cells;
    Word root;
    for_each_descendant(sys, root, Affine{}, n, [&](const Word& w, const Affine& a) {
      Info info{w, cell_vertices_at(sys, a), {}};
      Word sub;
      for_each_descendant(sys, sub, a, 3 - n, [&](const Word&, const Affine& da) {
        for (const auto& v : cell_vertices_at(sys, da)) info.deep_vertices.push_back(v);
      });
      cells.push_back(std::move(info));
    });
    const double tol = sys.vertex_tolerance(3);
    for (std::size_t a = 0; a < cells.size(); ++a) {
      for (std::size_t b = a + 1; b < cells.size(); ++b) {
        if (count_shared(cells[a].corners, cells[b].corners, tol, nullptr) > 1)
          throw AxiomViolation("nesting", "cells " + format_word(cells[a].word) + " and " + format_word(cells[b].word) +
                                              " intersect in more than one point");
        for (int side = 0; side < 2; ++side) {
          const Info& x = side == 0 ? cells[a] : cells[b];
          const Info& y = side == 0 ? cells[b] : cells[a];
          for (const auto& corner : x.corners) {
            const bool on_y = count_shared({corner}, y.deep_vertices, tol, nullptr) > 0;
            const bool corner_of_y = count_shared({corner}, y.corners, tol, nullptr) > 0;
            if (on_y && !corner_of_y)
              throw AxiomViolation("nesting", "vertex of cell " + format_word(x.word) +
                                                  " lies inside cell " + format_word(y.word));
          }
        }
      }
    }
  }

  // Connectivity of the level-1 cell graph.
  std::vector<std::vector<Vec2>> corners;
  for (int i = 0; i < sys.M; ++i) corners.push_back(cell_vertices_at(sys, sys.maps[i].affine()));
  std::vector<bool> seen(sys.M, false);
  std::queue<int> todo;
  todo.push(0);
  seen[0] = true;
  while (!todo.empty()) {
    const int i = todo.front();
    todo.pop();
    for (int j = 0; j < sys.M; ++j) {
      if (!seen[j] && count_shared(corners[i], corners[j], sys.vertex_tolerance(1), nullptr) > 0) {
        seen[j] = true;
        todo.push(j);
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw AxiomViolation("connectivity", "level-1 cells do not form a connected chain");
}

}  // namespace

// ---------------------------------------------------------------------------

Vec2 Similitude::fixed_point() const {
  const Mat2 a = rotation * contraction;
  const Mat2 m{1.0 - a.a, -a.b, -a.c, 1.0 - a.d};
  const double det = m.determinant();
  return {(m.d * translation.x - m.b * translation.y) / det, (-m.c * translation.x + m.a * translation.y) / det};
}

double FractalSystem::rho() const { return std::pow(L, d_w) / M; }

double FractalSystem::vertex_tolerance(int level) const { return 1e-9 * std::pow(L, -level); }

Affine FractalSystem::window_affine() const { return {Mat2::scaling(ipow(L, window_level)), {}}; }

std::vector<Vec2> FractalSystem::window_vertices() const { return cell_vertices_at(*this, window_affine()); }

FractalSystem FractalSystem::with_window(int m) const {
  if (m < 0) throw PreconditionError("window level must be >= 0");
  FractalSystem out = *this;
  out.window_level = m;
  return out;
}

FractalSystem build_preset(Preset preset, int window_level) {
  FractalSystem sys;
  const double h = std::sqrt(3.0) / 2.0;
  if (preset == Preset::sierpinski) {
    sys.name = "sierpinski";
    sys.L = 2.0;
    sys.essential_vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.5, h}};
    for (const auto& q : sys.essential_vertices) sys.maps.push_back({0.5, Mat2::identity(), q * 0.5});
    sys.d_w = std::log(5.0) / std::log(2.0);
    sys.diam = 1.0;
    sys.symmetries = dihedral(3);
  } else {
    sys.name = "vicsek";
    sys.L = 3.0;
    const std::vector<Vec2> q = {{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {1.0, 1.0}, {0.5, 0.5}};
    for (const auto& p : q) sys.maps.push_back({1.0 / 3.0, Mat2::identity(), p * (2.0 / 3.0)});
    sys.essential_vertices = {q[0], q[1], q[2], q[3]};
    sys.d_w = std::log(15.0) / std::log(3.0);
    sys.diam = std::sqrt(2.0);
    sys.symmetries = dihedral(4);
  }
  sys.window_level = window_level;
  finalize(sys);
  return sys;
}

FractalSystem build_preset(std::string_view name, int window_level) {
  if (name == "sierpinski" || name == "sg") return build_preset(Preset::sierpinski, window_level);
  if (name == "vicsek" || name == "vs") return build_preset(Preset::vicsek, window_level);
  throw PreconditionError("unknown preset '" + std::string(name) + "'");
}

FractalSystem build_custom(const SystemConfig& config) {
  if (config.maps.size() < 2) throw AxiomViolation("maps", "need at least two similitudes");
  if (config.M != 0 && config.M != static_cast<int>(config.maps.size()))
    throw AxiomViolation("maps", "M does not match the number of maps");
  if (!(config.L > 1.0)) throw AxiomViolation("scaling", "L must exceed 1");
  if (!(config.d_w > 1.0)) throw AxiomViolation("walk dimension", "d_w must be supplied and exceed 1");
  if (config.essential_vertices.size() < 2) throw AxiomViolation("V0 size", "need at least two essential vertices");
  if (config.window_level < 0) throw AxiomViolation("window", "window level must be >= 0");

  FractalSystem sys;
  sys.name = config.name;
  sys.L = config.L;
  sys.d_w = config.d_w;
  sys.essential_vertices = config.essential_vertices;
  for (const auto& m : config.maps) {
    if (std::abs(m.scale * config.L - 1.0) > 1e-12)
      throw AxiomViolation("scaling", "every map must contract by exactly 1/L");
    sys.maps.push_back({m.scale, Mat2::rotation(m.rotation_degrees * std::numbers::pi / 180.0), m.translation});
  }
  const auto& first = sys.maps.front();
  if (norm(first.translation) > 1e-12 || std::abs(first.rotation.a - 1.0) > kOrthoTol || std::abs(first.rotation.c) > kOrthoTol)
    throw AxiomViolation("blow-up convention", "the first map must be the pure scaling x -> x/L");

  for (const auto& v : sys.essential_vertices) {
    int fixed = 0;
    for (const auto& m : sys.maps) fixed += distance(m.fixed_point(), v) <= 1e-9 ? 1 : 0;
    if (fixed != 1) throw AxiomViolation("essential vertices", "each essential vertex must be the fixed point of exactly one map");
  }
  double spread = 0.0;
  for (const auto& a : sys.essential_vertices)
    for (const auto& b : sys.essential_vertices) spread = std::max(spread, distance(a, b));
  sys.diam = config.diam > 0.0 ? config.diam : spread;
  if (sys.diam < spread - 1e-12) throw AxiomViolation("diameter", "diam is smaller than the essential vertex spread");
  sys.window_level = 0;
  sys.M = static_cast<int>(sys.maps.size());
  sys.d_h = std::log(static_cast<double>(sys.M)) / std::log(sys.L);
  Vec2 c;
  for (const auto& v : sys.essential_vertices) c = c + v;
  sys.center = c * (1.0 / static_cast<double>(sys.essential_vertices.size()));
  sys.radius = enclosing_radius(sys);
  validate_nesting(sys);
  sys.window_level = config.window_level;
  finalize(sys);
  return sys;
}

// ---------------------------------------------------------------------------

Cell::Cell(Word full_word, int window_level) : word_(std::move(full_word)), window_level_(window_level) {
  if (window_level_ < 0 || level() < 0) throw PreconditionError("cell word shorter than the window level");
}

Cell Cell::child(int symbol) const {
  Word w = word_;
  w.push_back(symbol);
  return Cell(std::move(w), window_level_);
}

Cell Cell::mapped(int symbol) const {
  Word w;
  w.reserve(word_.size() + 1);
  w.push_back(symbol);
  w.insert(w.end(), word_.begin(), word_.end());
  return Cell(std::move(w), window_level_);
}

bool Cell::contains(const Cell& other) const {
  return window_level_ == other.window_level_ && other.word_.size() >= word_.size() &&
         std::equal(word_.begin(), word_.end(), other.word_.begin());
}

Rational cell_measure(const FractalSystem& sys, const Cell& cell) {
  std::uint64_t den = 1;
  for (int i = 0; i < cell.level(); ++i) den *= static_cast<std::uint64_t>(sys.M);
  return {1, den};
}

Affine cell_affine(const FractalSystem& sys, const Cell& cell) {
  if (cell.window_level() != sys.window_level) throw PreconditionError("cell belongs to a different window");
  Affine a = sys.window_affine();
  for (int s : cell.word()) {
    if (s < 1 || s > sys.M) throw PreconditionError("word symbol out of range");
    a = a.compose(sys.maps[s - 1].affine());
  }
  return a;
}

std::vector<Vec2> cell_vertices(const FractalSystem& sys, const Cell& cell) {
  return cell_vertices_at(sys, cell_affine(sys, cell));
}

Vec2 cell_center(const FractalSystem& sys, const Cell& cell) { return cell_affine(sys, cell).apply(sys.center); }

CellUnion::CellUnion(std::vector<Cell> cells) : cells_(std::move(cells)) {
  std::sort(cells_.begin(), cells_.end());
  if (std::adjacent_find(cells_.begin(), cells_.end()) != cells_.end())
    throw PreconditionError("cell union contains a repeated cell");
  if (!cells_.empty()) {
    level_ = cells_.front().level();
    for (const auto& c : cells_) {
      if (c.level() != level_ || c.window_level() != cells_.front().window_level())
        throw PreconditionError("cell union mixes levels or windows; use refined_from");
    }
  }
}

namespace {

void expand_to(const FractalSystem& sys, const Cell& c, int level, std::vector<Cell>& out) {
  if (c.level() == level) {
    out.push_back(c);
    return;
  }
  for (int s = 1; s <= sys.M; ++s) expand_to(sys, c.child(s), level, out);
}

}  // namespace

CellUnion CellUnion::refined_from(const FractalSystem& sys, std::vector<Cell> cells) {
  int deepest = 0;
  for (const auto& c : cells) deepest = std::max(deepest, c.level());
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = 0; j < cells.size(); ++j)
      if (i != j && cells[i].contains(cells[j])) throw PreconditionError("cell union contains nested or repeated cells");
  std::vector<Cell> out;
  for (const auto& c : cells) expand_to(sys, c, deepest, out);
  return CellUnion(std::move(out));
}

bool CellUnion::contains(const Cell& cell) const { return std::binary_search(cells_.begin(), cells_.end(), cell); }

Rational CellUnion::measure(const FractalSystem& sys) const {
  if (cells_.empty()) return {0, 1};
  const Rational one = cell_measure(sys, cells_.front());
  return {static_cast<std::uint64_t>(cells_.size()), one.den};
}

CellUnion CellUnion::refined(const FractalSystem& sys, int level) const {
  if (!cells_.empty() && level < level_) throw PreconditionError("cannot coarsen a cell union");
  std::vector<Cell> out;
  for (const auto& c : cells_) expand_to(sys, c, level, out);
  return CellUnion(std::move(out));
}

// ---------------------------------------------------------------------------

Vec2 apply_word(const FractalSystem& sys, const Word& word, Vec2 p) {
  for (auto it = word.rbegin(); it != word.rend(); ++it) {
    if (*it < 1 || *it > sys.M) throw PreconditionError("word symbol out of range");
    p = sys.maps[*it - 1].apply(p);
  }
  return p;
}

std::vector<Cell> cells_at_level(const FractalSystem& sys, int n, std::size_t cap) {
  if (n < 0) throw PreconditionError("level must be >= 0");
  const double count = ipow(sys.M, sys.window_level + n);
  if (count > static_cast<double>(cap)) throw CapExceeded("cell enumeration exceeds cap of " + std::to_string(cap));
  std::vector<Cell> out;
  out.reserve(static_cast<std::size_t>(count));
  Word w;
  for_each_descendant(sys, w, sys.window_affine(), sys.window_level + n,
                      [&](const Word& word, const Affine&) { out.emplace_back(word, sys.window_level); });
  return out;
}

std::vector<Cell> cells_near(const FractalSystem& sys, int level, std::span<const Cell> targets, double reach,
                             std::size_t cap) {
  std::vector<Ball> balls;
  for (const auto& t : targets) {
    balls.push_back(ball_of(sys, cell_affine(sys, t), ipow(sys.L, -t.level())));
  }
  std::vector<Cell> out;
  Word w;
  const int total = sys.window_level + level;
  std::function<void(const Affine&, double)> visit = [&](const Affine& a, double scale) {
    const Ball b = ball_of(sys, a, scale);
    bool near = false;
    for (const auto& t : balls) {
      if (ball_gap(b, t) <= reach) {
        near = true;
        break;
      }
    }
    if (!near) return;
    if (static_cast<int>(w.size()) == total) {
      if (out.size() >= cap) throw CapExceeded("neighbourhood enumeration exceeds cap");
      out.emplace_back(w, sys.window_level);
      return;
    }
    for (int i = 0; i < sys.M; ++i) {
      w.push_back(i + 1);
      visit(a.compose(sys.maps[i].affine()), scale / sys.L);
      w.pop_back();
    }
  };
  visit(sys.window_affine(), ipow(sys.L, sys.window_level));
  return out;
}

std::optional<Vec2> shared_point(const FractalSystem& sys, const Cell& a, const Cell& b) {
  if (a == b) throw PreconditionError("shared_point requires two distinct cells");
  if (a.level() != b.level()) throw PreconditionError("shared_point requires cells of the same level");
  Vec2 where;
  const int n = count_shared(cell_vertices(sys, a), cell_vertices(sys, b), sys.vertex_tolerance(a.level()), &where);
  if (n > 1)
    throw InvariantViolation("cells " + format_word(a.word()) + " and " + format_word(b.word()) +
                             " share more than one vertex (nesting violated)");
  if (n == 0) return std::nullopt;
  return where;
}

std::vector<BoundaryPair> boundary_pairs(const FractalSystem& sys, const CellUnion& U) {
  std::vector<BoundaryPair> out;
  if (U.empty()) return out;
  const int n = U.level();
  const double tol = sys.vertex_tolerance(n);
  const auto window = sys.window_vertices();
  for (const auto& c : U.cells()) {
    if (count_shared(cell_vertices(sys, c), window, tol, nullptr) > 0)
      throw WindowTooSmall("cell " + format_word(c.word()) +
                           " touches the window boundary; rebuild with a larger window level");
  }
  const auto candidates = cells_near(sys, n, U.cells(), tol);
  for (const auto& in : U.cells()) {
    for (const auto& out_cell : candidates) {
      if (U.contains(out_cell)) continue;
      if (auto p = shared_point(sys, in, out_cell)) out.push_back({in, out_cell, *p});
    }
  }
  std::sort(out.begin(), out.end(), [](const BoundaryPair& x, const BoundaryPair& y) {
    return std::tie(x.inside, x.outside) < std::tie(y.inside, y.outside);
  });
  return out;
}

std::vector<Vec2> boundary_points(const FractalSystem& sys, const CellUnion& U) {
  PointIndex index(U.empty() ? 1e-9 : sys.vertex_tolerance(U.level()));
  for (const auto& bp : boundary_pairs(sys, U)) index.insert(bp.point);
  auto pts = index.points();
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  return pts;
}

int neighbor_count_R(const FractalSystem& sys) {
  const FractalSystem w = sys.with_window(std::max(1, sys.window_level));
  const Cell origin(Word(w.window_level + 1, 1), w.window_level);
  const double tol = w.vertex_tolerance(1);
  const auto window = w.window_vertices();
  std::vector<Vec2> interior;
  for (const auto& v : cell_vertices(w, origin)) {
    if (count_shared({v}, window, tol, nullptr) == 0) interior.push_back(v);
  }
  const std::vector<Cell> target{origin};
  int count = 0;
  for (const auto& c : cells_near(w, 1, target, tol)) {
    if (c == origin) continue;
    if (count_shared(cell_vertices(w, c), interior, tol, nullptr) > 0) ++count;
  }
  return count;
}

std::pair<Cell, Cell> reference_pair(const FractalSystem& sys) {
  const auto cells = cells_at_level(sys, 1);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::vector<Cell> target{cells[i]};
    auto near = cells_near(sys, 1, target, sys.vertex_tolerance(1));
    std::sort(near.begin(), near.end());
    for (const auto& c : near) {
      if (cells[i] < c && shared_point(sys, cells[i], c)) return {cells[i], c};
    }
  }
  throw InvariantViolation("no touching pair of 1-complexes in the window");
}

// ---------------------------------------------------------------------------

bool Graph::connected() const {
  if (vertices.empty()) return true;
  std::vector<bool> seen(vertices.size(), false);
  std::vector<int> stack{0};
  seen[0] = true;
  std::size_t visited = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : adjacent(v)) {
      if (!seen[u]) {
        seen[u] = true;
        ++visited;
        stack.push_back(u);
      }
    }
  }
  return visited == vertices.size();
}

Graph vertex_graph(const FractalSystem& sys, std::span<const Cell> roots, int N, std::size_t cap) {
  double total = 0.0;
  for (const auto& r : roots) {
    if (r.level() > N) throw PreconditionError("graph root is finer than the graph level");
    total += ipow(sys.M, N - r.level());
  }
  if (total > static_cast<double>(cap)) throw CapExceeded("vertex graph exceeds cap of " + std::to_string(cap) + " cells");

  Graph g;
  g.level = N;
  PointIndex index(sys.vertex_tolerance(N));
  std::vector<std::pair<int, int>> edges;
  std::vector<int> ids(sys.vertex_count());
  for (const auto& root : roots) {
    Word w = root.word();
    for_each_descendant(sys, w, cell_affine(sys, root), N - root.level(), [&](const Word&, const Affine& a) {
      for (std::size_t k = 0; k < sys.vertex_count(); ++k) {
        ids[k] = index.insert(a.apply(sys.essential_vertices[k]));
        if (static_cast<std::size_t>(ids[k]) >= g.cell_count.size()) g.cell_count.push_back(0);
        ++g.cell_count[ids[k]];
      }
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j)
          edges.emplace_back(std::min(ids[i], ids[j]), std::max(ids[i], ids[j]));
      ++g.cell_total;
    });
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  g.vertices = index.points();
  const std::size_t nv = g.vertices.size();
  g.offsets.assign(nv + 1, 0);
  for (const auto& [a, b] : edges) {
    ++g.offsets[a + 1];
    ++g.offsets[b + 1];
  }
  for (std::size_t v = 0; v < nv; ++v) g.offsets[v + 1] += g.offsets[v];
  g.neighbors.resize(2 * edges.size());
  std::vector<int> fill(g.offsets.begin(), g.offsets.end() - 1);
  for (const auto& [a, b] : edges) {
    g.neighbors[fill[a]++] = b;
    g.neighbors[fill[b]++] = a;
  }
  for (std::size_t v = 0; v < nv; ++v) std::sort(g.neighbors.begin() + g.offsets[v], g.neighbors.begin() + g.offsets[v + 1]);
  return g;
}

Graph vertex_graph(const FractalSystem& sys, int N, std::size_t cap) {
  const auto roots = cells_at_level(sys, 0, cap);
  return vertex_graph(sys, roots, N, cap);
}

// ---------------------------------------------------------------------------

std::vector<Cell> parse_cells(const FractalSystem& sys, std::string_view text) {
  std::vector<Cell> out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    Word w;
    std::string sym;
    const bool dashed = token.find('-') != std::string::npos || token.find('.') != std::string::npos;
    for (char ch : token) {
      if (ch == '-' || ch == '.') {
        if (!sym.empty()) w.push_back(std::stoi(sym));
        sym.clear();
      } else if (std::isdigit(static_cast<unsigned char>(ch))) {
        if (dashed) {
          sym.push_back(ch);
        } else {
          w.push_back(ch - '0');
        }
      } else {
        throw PreconditionError("bad character in cell word '" + token + "'");
      }
    }
    if (!sym.empty()) w.push_back(std::stoi(sym));
    for (int s : w)
      if (s < 1 || s > sys.M) throw PreconditionError("symbol out of range in cell word '" + token + "'");
    out.emplace_back(std::move(w), sys.window_level);
    token.clear();
  };
  for (char ch : text) {
    if (ch == ',' || ch == ';' || std::isspace(static_cast<unsigned char>(ch))) {
      flush();
    } else {
      token.push_back(ch);
    }
  }
  flush();
  return out;
}

std::string format_word(const Word& word) {
  std::ostringstream os;
  bool wide = std::any_of(word.begin(), word.end(), [](int s) { return s > 9; });
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (wide && i > 0) os << '-';
    os << word[i];
  }
  return os.str();
}

}  // namespace fbv
