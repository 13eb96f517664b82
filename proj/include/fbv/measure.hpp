#pragma once

#include "fbv/ifs.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

namespace fbv {

inline constexpr int kMaxDepth = 14;

// Directed rounding for enclosures. The exact error terms come from fma and two-sum, so each
// result is the correctly rounded value moved at most one ulp outwards.
inline double add_down(double a, double b) {
  const double s = a + b, bb = s - a, err = (a - (s - bb)) + (b - bb);
  return err < 0.0 ? std::nextafter(s, -std::numeric_limits<double>::infinity()) : s;
}
inline double add_up(double a, double b) {
  const double s = a + b, bb = s - a, err = (a - (s - bb)) + (b - bb);
  return err > 0.0 ? std::nextafter(s, std::numeric_limits<double>::infinity()) : s;
}
inline double mul_down(double a, double b) {
  const double p = a * b;
  return std::fma(a, b, -p) < 0.0 ? std::nextafter(p, -std::numeric_limits<double>::infinity()) : p;
}
inline double mul_up(double a, double b) {
  const double p = a * b;
  return std::fma(a, b, -p) > 0.0 ? std::nextafter(p, std::numeric_limits<double>::infinity()) : p;
}
/// a / b for b > 0.
inline double div_down(double a, double b) {
  const double q = a / b;
  return std::fma(-q, b, a) < 0.0 ? std::nextafter(q, -std::numeric_limits<double>::infinity()) : q;
}
inline double div_up(double a, double b) {
  const double q = a / b;
  return std::fma(-q, b, a) > 0.0 ? std::nextafter(q, std::numeric_limits<double>::infinity()) : q;
}

/// Two-sided bounds on a mass; hi - lo is the mass left undecided plus outward rounding.
struct MassInterval {
  double lo = 0.0;
  double hi = 0.0;
  int depth_reached = 0;
  std::uint64_t pairs_visited = 0;

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool intersects(const MassInterval& o) const { return lo <= o.hi && o.lo <= hi; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  /// Multiplies by a factor s >= 0 known only to relative accuracy `rel`; rounded outwards.
  MassInterval scaled(double s, double rel = 0.0) const {
    const double s_lo = rel > 0.0 ? mul_down(s, 1.0 - rel) : s, s_hi = rel > 0.0 ? mul_up(s, 1.0 + rel) : s;
    return {mul_down(lo, s_lo), mul_up(hi, s_hi), depth_reached, pairs_visited};
  }
  MassInterval& operator+=(const MassInterval& o) {
    lo = add_down(lo, o.lo);
    hi = add_up(hi, o.hi);
    depth_reached = std::max(depth_reached, o.depth_reached);
    pairs_visited += o.pairs_visited;
    return *this;
  }
};

struct BoundingBall {
  Vec2 center;
  double radius = 0.0;
};

BoundingBall cell_bounding_ball(const FractalSystem& sys, const Cell& cell);

struct EngineOptions {
  /// Deepest cell level the recursion may split to (absolute level, at most kMaxDepth).
  int depth_cap = 12;
  /// Stop deepening once hi - lo falls to this value; 0 means go straight to depth_cap.
  double width_target = 0.0;
  /// Reuse results across congruent cell pairs. Only honoured for translation-only systems.
  bool memoize = false;
};

/// Bounds on mu x mu({(x, y) in A x B : |x - y| <= r}).
MassInterval pair_mass(const FractalSystem& sys, const Cell& A, const Cell& B, double r, const EngineOptions& opts = {});
MassInterval pair_mass(const FractalSystem& sys, const CellUnion& A, const CellUnion& B, double r,
                       const EngineOptions& opts = {});

/// Bounds on mu(B(p, r) intersected with A).
MassInterval ball_mass(const FractalSystem& sys, Vec2 p, double r, const Cell& A, const EngineOptions& opts = {});
MassInterval ball_mass(const FractalSystem& sys, Vec2 p, double r, const CellUnion& A, const EngineOptions& opts = {});

/// Distance between two cells: lower bound by ball refinement down to `depth` extra levels,
/// upper bound from their vertices.
struct DistanceBounds {
  double lo = 0.0;
  double hi = 0.0;
};
DistanceBounds cell_distance(const FractalSystem& sys, const Cell& A, const Cell& B, int depth = 8);

/// Monte Carlo estimate of a mass with a Wilson score interval.
struct MonteCarloEstimate {
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t samples = 0;
};

/// Wilson score interval for `hits` successes out of `samples` at normal quantile z.
std::pair<double, double> wilson_interval(std::uint64_t hits, std::uint64_t samples, double z);

inline constexpr double kZ99 = 2.5758293035489004;
inline constexpr double kZ95 = 1.959963984540054;

/// Draws mu-distributed point pairs from A x B (random words of length ~20 below each cell).
MonteCarloEstimate mc_pair_mass(const FractalSystem& sys, const Cell& A, const Cell& B, double r,
                                std::uint64_t samples, std::uint64_t seed, double z = kZ99, unsigned threads = 0);
MonteCarloEstimate mc_ball_mass(const FractalSystem& sys, Vec2 p, double r, const Cell& A, std::uint64_t samples,
                                std::uint64_t seed, double z = kZ99, unsigned threads = 0);

/// Deterministic per-stream seed derived from a root seed.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

}  // namespace fbv
