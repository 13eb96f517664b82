#pragma once

#include "fbv/ks.hpp"

#include <limits>
#include <vector>

namespace fbv {

/// Samples (z = -ln x, e^{gamma z} f(e^{-z})), so that f(x) = x^gamma theta(-ln x) maps to theta.
Curve to_log_frame(const Curve& curve, double gamma);

/// gamma = -ln(alpha) / ln(beta).
double renewal_exponent(double alpha, double beta);

struct PhaseBin {
  double phase = 0.0;
  double mean = 0.0;
  double spread = 0.0;  // max - min of the samples in the bin
  int n_samples = 0;
};

struct PhaseProfile {
  double period = 0.0;
  std::vector<PhaseBin> bins;
  /// Largest change of a bin mean between consecutive periods.
  double drift = 0.0;
  /// drift / |mean over all samples|
  double relative_drift = 0.0;
  double amplitude = 0.0;
  double mean = 0.0;
  int n_periods = 0;
};

/// Folds a log-frame curve (abscissa z) onto [0, period). Samples use their midpoints.
/// `bins` = 0 detects the phases present on an aligned grid.
PhaseProfile fold(const Curve& curve, double period, int bins = 0);

struct ScalingResidual {
  std::vector<double> x;          // abscissa t of each compared pair
  std::vector<double> residual;   // |f(t) - alpha f(beta t)|, or the interval gap
  std::vector<bool> within;       // residual <= c exp(-C t^{-1/(d_w-1)})
  bool all_within = true;
  /// Largest C for which every residual sits under the envelope with the given c.
  double max_admissible_C = std::numeric_limits<double>::infinity();
  double max_residual = 0.0;
};

/// Compares f(t) with alpha f(beta t) on samples whose abscissas differ by beta.
/// For interval samples the residual is the gap between the two intervals.
ScalingResidual scaling_residual(const Curve& curve, double alpha, double beta, double c, double C, double d_w);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fbv
