#pragma once

#include "fbv/measure.hpp"

#include <string>
#include <vector>

namespace fbv {

/// One sample of a curve; point-valued samples have lo == hi.
struct CurveSample {
  double x = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

enum class Abscissa { radius, time, log };

/// Samples over a geometric grid, abscissas strictly decreasing (or increasing for log frames).
struct Curve {
  Abscissa scale = Abscissa::radius;
  std::string normalization;
  std::vector<CurveSample> samples;
};

/// x_j = start * factor^(-j / per_period), j = 0 .. per_period * periods - 1.
std::vector<double> geometric_grid(double start, double factor, int per_period, int periods);
/// Grid from start down to (and including, if aligned) stop.
std::vector<double> geometric_grid_between(double start, double stop, double factor, int per_period);

/// r^{-d_h} G_{A,B}(r).
MassInterval ks_pair(const FractalSystem& sys, const Cell& A, const Cell& B, double r, const EngineOptions& opts = {});

/// Largest radius for which G_{A,B} equals the mass of the two children meeting at the shared point.
/// Half the smallest lower distance bound among all other child pairs.
double localization_threshold(const FractalSystem& sys, const Cell& A, const Cell& B);

/// The children of A and B that meet at their shared point.
std::pair<Cell, Cell> touching_children(const FractalSystem& sys, const Cell& A, const Cell& B);

/// Largest radius for which the indicator functional of U splits into touching boundary pairs.
double union_threshold(const FractalSystem& sys, const CellUnion& U);

/// r^{-d_h} times the double integral of |1_U(x) - 1_U(y)| over pairs within distance r.
/// `direct` sums every inside/outside cell pair instead of the touching pairs and ignores the threshold.
MassInterval ks_union(const FractalSystem& sys, const CellUnion& U, double r, const EngineOptions& opts = {},
                      bool direct = false);

/// N(r) = r^{-2 d_h} G_{A,B}(r) over the grid.
Curve normalized_profile(const FractalSystem& sys, const Cell& A, const Cell& B, const std::vector<double>& grid,
                         const EngineOptions& opts = {}, unsigned threads = 0);
/// N_U(r) = r^{-d_h} ks_union(U, r) over the grid.
Curve normalized_profile(const FractalSystem& sys, const CellUnion& U, const std::vector<double>& grid,
                         const EngineOptions& opts = {}, unsigned threads = 0, bool direct = false);

struct PeriodicityReport {
  /// Largest gap between the intervals at r and factor*r (0 when every pair overlaps).
  double max_residual = 0.0;
  double offending_x = 0.0;
  int comparisons = 0;
  bool exact() const { return max_residual == 0.0; }
};

/// Compares samples whose abscissas differ by `factor`; gaps beyond the interval widths are reported.
PeriodicityReport periodicity_check(const Curve& curve, double factor);

struct OscillationReport {
  double period_log = 0.0;
  /// max lo - min hi over the samples; positive means certified non-constancy.
  double amplitude = 0.0;
  double mean = 0.0;
  double max_periodicity_residual = 0.0;
  double interval_width_max = 0.0;
  double x_of_max = 0.0;
  double x_of_min = 0.0;
  /// amplitude > 5 * interval_width_max
  bool certified = false;
};

OscillationReport oscillation_amplitude(const Curve& curve, double period_log = 0.0);

struct PhaseSequence {
  double phase = 0.0;
  std::vector<int> levels;
  std::vector<double> radii;
  std::vector<MassInterval> values;  // N at each radius
  /// Intersection of all values; empty (lo > hi) when the sequence is not constant.
  MassInterval common;
};

struct SubsequenceReport {
  std::vector<PhaseSequence> phases;
  /// Some two phases have disjoint common intervals.
  bool disjoint = false;
  /// Mass ratio G(r_m (1 + 1/L)) / G(r_m) at the finest level, against 1 + R/M.
  MassInterval measured_ratio;
  double predicted_ratio = 0.0;
  bool matches_prediction = false;
};

/// N(s * diam * L^{-m}) for each phase s in (1/L, 1] and m in `levels`.
SubsequenceReport subsequence_limits(const FractalSystem& sys, const Cell& A, const Cell& B,
                                     const std::vector<double>& phases, const std::vector<int>& levels,
                                     const EngineOptions& opts = {}, unsigned threads = 0);

/// The two phases 1 and (1 + 1/L)/L.
std::vector<double> standard_phases(const FractalSystem& sys);

struct RecoveryReport {
  MassInterval estimate;  // N_U / (2 N_ref)
  int boundary_count = 0; // from vertex enumeration
  int integers_inside = 0;
  bool recovered() const { return integers_inside == 1 && estimate.contains(boundary_count); }
};

/// Ratio of the union's normalized functional to twice that of the reference pair.
RecoveryReport boundary_recovery(const FractalSystem& sys, const CellUnion& U, double r,
                                 const EngineOptions& opts = {});

/// Psi(z) = 1 / (2 N(e^{-z})); abscissa is z = -ln r.
Curve psi_profile(const Curve& curve);

/// Named example unions: "single", "pair", "staircase", "mixed".
CellUnion example_union(const FractalSystem& sys, const std::string& name);

}  // namespace fbv
