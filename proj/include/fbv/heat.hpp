#pragma once

#include "fbv/ifs.hpp"
#include "fbv/ks.hpp"
#include "fbv/renewal.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace fbv {

/// Lazy simple random walk on a level-N vertex graph: stay with probability 1/2, otherwise
/// jump to a uniformly chosen neighbour. One step lasts time_unit = L^{-N d_w}.
struct WalkOperator {
  Graph graph;
  int level = 0;
  double time_unit = 0.0;
  /// Vertex measure: (number of N-cells at x) * M^{-N} / |V0|.
  std::vector<double> pi;
  double cell_weight = 0.0;  // M^{-N} / |V0|
  PointIndex index{1e-9};

  std::size_t size() const { return pi.size(); }
  /// v <- v P for a row vector v (a measure).
  void step(std::vector<double>& v, std::vector<double>& scratch) const;
  /// Same, then zeroes every vertex with alive[x] == 0.
  void step_killed(std::vector<double>& v, std::vector<double>& scratch, const std::vector<char>& alive) const;
  int vertex_at(Vec2 p) const { return index.find(p); }
};

WalkOperator build_walk(const FractalSystem& sys, int N, std::size_t cap = kDefaultCellCap);
/// Walk on the vertices of the cells descending from `roots`.
WalkOperator build_walk(const FractalSystem& sys, std::span<const Cell> roots, int N, std::size_t cap = kDefaultCellCap);

/// round(t / time_unit); throws when below one step.
int steps_for(const WalkOperator& walk, double t);

/// pi restricted to the N-cells inside `cells` (cells at level <= N).
std::vector<double> set_weights(const FractalSystem& sys, const WalkOperator& walk, std::span<const Cell> cells);

/// Discrete kernel p_k(x, y) = P^k(x, y) / pi(y) for x in sources, y in targets (row-major).
struct KernelSlice {
  std::vector<int> sources;
  std::vector<int> targets;
  int steps = 0;
  std::vector<double> values;
  std::vector<double> pi_sources;
  std::vector<double> pi_targets;
  double at(std::size_t i, std::size_t j) const { return values[i * targets.size() + j]; }
};

KernelSlice kernel_slice(const WalkOperator& walk, const std::vector<int>& sources, const std::vector<int>& targets,
                         int steps, const std::vector<char>* alive = nullptr);

/// sum_x sum_y pi_A(x) pi_B(y) p_k(x, y) with k = steps_for(t).
double heat_pair(const FractalSystem& sys, const WalkOperator& walk, std::span<const Cell> A, std::span<const Cell> B,
                 double t);
double heat_pair(const FractalSystem& sys, const WalkOperator& walk, const Cell& A, const Cell& B, double t);
/// Weighted form used by the other routines; `alive` kills the walk outside a vertex set.
double heat_pair_steps(const WalkOperator& walk, const std::vector<double>& weights_a,
                       const std::vector<double>& weights_b, int steps, const std::vector<char>* alive = nullptr);

struct HeatSample {
  double t = 0.0;
  int steps = 0;
  double value = 0.0;     // M_{1_U}(t)
  double rescaled = 0.0;  // t^{-d_h/d_w} M_{1_U}(t)
};

struct HeatCurve {
  std::vector<HeatSample> samples;
  /// Rescaled values as a point-valued curve over t.
  Curve rescaled_curve() const;
};

/// 2 * sum over touching boundary pairs of heat_pair (or 2 * heat_pair(U, U^c) when direct).
HeatCurve heat_union(const FractalSystem& sys, const WalkOperator& walk, const CellUnion& U,
                     const std::vector<double>& t_grid, bool direct = false, unsigned threads = 0);

/// heat_pair for the walk killed on leaving the vertices within r_halo of A and B.
double dirichlet_heat_pair(const FractalSystem& sys, const WalkOperator& walk, const Cell& A, const Cell& B,
                           double r_halo, double t);
/// Vertices within r_halo of the vertices of A and B; throws if it reaches a window attachment point.
std::vector<char> halo_vertices(const FractalSystem& sys, const WalkOperator& walk, std::span<const Cell> cells,
                                double r_halo);

struct HeatScalingCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;     // |lhs - rhs| / lhs
  double sensitivity = 0.0;  // max relative change of rhs under steps +- 1
  int steps_lhs = 0;
  int steps_rhs = 0;
};

/// Compares M_{A,B}(t) on the level-N walk with M^n M_{psi(A), psi(B)}(L^{-n d_w} t) on a level-(N+n) walk,
/// where psi = psi_map applied n times. `isomorphic` builds the right side on the image of the window only.
HeatScalingCheck scaling_check_heat(const FractalSystem& sys, const Cell& A, const Cell& B, double t, int n, int N,
                                    int psi_map = 1, bool isomorphic = true);

struct HittingPoint {
  double t = 0.0;
  int steps = 0;
  std::uint64_t exits = 0;
  std::uint64_t samples = 0;
  double probability = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool upper_only = false;  // no exits observed: ci_hi is a one-sided bound
};

struct HittingTail {
  int start_vertex = -1;
  double distance_to_complement = 0.0;
  std::vector<HittingPoint> points;
  std::vector<double> scaled_distance;  // (d^{d_w} / t)^{1/(d_w-1)} per point
  LinearFit fit;                        // ln P against scaled distance, points with exits only
};

/// Monte Carlo probability that the walk from x leaves the interior vertices of U within t.
HittingTail hitting_tail_mc(const FractalSystem& sys, const WalkOperator& walk, const CellUnion& U, Vec2 x,
                            const std::vector<double>& t_grid, std::uint64_t samples, std::uint64_t seed,
                            unsigned threads = 0);

struct PhiProfile {
  Curve phi;  // |dU| / rescaled value, abscissa z = -ln t
  PhaseProfile folded;
};

/// Phi(z) = |dU| / (t^{-d_h/d_w} M_U(t)) at t = e^{-z}, folded on d_w ln L.
PhiProfile phi_profile(const FractalSystem& sys, const HeatCurve& curve, int boundary_count, int bins = 0);

/// sup over the grid of t^{-d_h/d_w} M_{1_U}(t).
double besov_seminorm_probe(const FractalSystem& sys, const WalkOperator& walk, const CellUnion& U,
                            const std::vector<double>& t_grid, unsigned threads = 0);

/// Two parallel lines y = b - c X enclosing ln(p t^{d_h/d_w}) against X = (d^{d_w}/t)^{1/(d_w-1)}.
struct EnvelopeFit {
  double rate = 0.0;            // c, from the least-squares slope
  double lower_intercept = 0.0; // ln c_1
  double upper_intercept = 0.0; // ln c_3
  double ratio() const;         // c_3 / c_1
};

EnvelopeFit fit_subgaussian_envelope(const std::vector<double>& scaled_distance, const std::vector<double>& log_values);

}  // namespace fbv
