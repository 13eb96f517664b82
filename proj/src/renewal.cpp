#include "fbv/renewal.hpp"

#include "fbv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace fbv {

Curve to_log_frame(const Curve& curve, double gamma) {
  Curve out;
  out.scale = Abscissa::log;
  out.normalization = curve.normalization;
  for (const auto& s : curve.samples) {
    if (!(s.x > 0.0)) throw PreconditionError("log frame needs positive abscissas");
    const double z = -std::log(s.x);
    const double factor = std::exp(gamma * z);
    out.samples.push_back({z, s.lo * factor, s.hi * factor});
  }
  return out;
}

double renewal_exponent(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0) || beta == 1.0) throw PreconditionError("need alpha > 0 and 0 < beta != 1");
  return -std::log(alpha) / std::log(beta);
}

PhaseProfile fold(const Curve& curve, double period, int bins) {
  if (!(period > 0.0)) throw PreconditionError("period must be positive");
  if (curve.samples.empty()) throw PreconditionError("fold needs samples from at least 2 periods");
  double z0 = curve.samples.front().x;
  for (const auto& s : curve.samples) z0 = std::min(z0, s.x);

  std::vector<double> phases;
  for (const auto& s : curve.samples) phases.push_back(std::fmod(s.x - z0, period));
  if (bins <= 0) {
    // Count distinct phases; a phase next to `period` wraps onto 0.
    std::vector<double> sorted = phases;
    for (auto& p : sorted)
      if (period - p < 1e-6 * period) p = 0.0;
    std::sort(sorted.begin(), sorted.end());
    bins = 0;
    double last = -1.0;
    for (double p : sorted) {
      if (bins == 0 || p - last > 1e-6 * period) ++bins;
      last = p;
    }
  }

  struct Acc {
    double sum = 0.0, lo = 0.0, hi = 0.0;
    int n = 0;
  };
  std::vector<Acc> total(bins);
  std::map<std::pair<int, long>, Acc> per_period;
  std::set<long> periods_seen;
  double grand = 0.0;
  for (std::size_t i = 0; i < curve.samples.size(); ++i) {
    const double v = curve.samples[i].mid();
    const double rel = (curve.samples[i].x - z0) / period;
    long q = static_cast<long>(std::floor(rel + 1e-9));
    int b = static_cast<int>(std::lround((rel - static_cast<double>(q)) * bins));
    if (b == bins) {
      b = 0;
      ++q;
    }
    periods_seen.insert(q);
    for (Acc* acc : {&total[b], &per_period[{b, q}]}) {
      if (acc->n == 0) acc->lo = acc->hi = v;
      acc->sum += v;
      acc->lo = std::min(acc->lo, v);
      acc->hi = std::max(acc->hi, v);
      ++acc->n;
    }
    grand += v;
  }
  if (periods_seen.size() < 2) throw PreconditionError("fold needs samples from at least 2 periods");

  PhaseProfile out;
  out.period = period;
  out.n_periods = static_cast<int>(periods_seen.size());
  out.mean = grand / static_cast<double>(curve.samples.size());
  double max_mean = -std::numeric_limits<double>::infinity(), min_mean = std::numeric_limits<double>::infinity();
  for (int b = 0; b < bins; ++b) {
    if (total[b].n == 0) continue;
    const double mean = total[b].sum / total[b].n;
    out.bins.push_back({period * b / bins, mean, total[b].hi - total[b].lo, total[b].n});
    max_mean = std::max(max_mean, mean);
    min_mean = std::min(min_mean, mean);
  }
  out.amplitude = out.bins.empty() ? 0.0 : max_mean - min_mean;
  for (auto it = per_period.begin(); it != per_period.end(); ++it) {
    auto next = per_period.find({it->first.first, it->first.second + 1});
    if (next == per_period.end()) continue;
    const double a = it->second.sum / it->second.n, b = next->second.sum / next->second.n;
    out.drift = std::max(out.drift, std::abs(b - a));
  }
  out.relative_drift = out.mean != 0.0 ? out.drift / std::abs(out.mean) : 0.0;
  return out;
}

ScalingResidual scaling_residual(const Curve& curve, double alpha, double beta, double c, double C, double d_w) {
  if (!(d_w > 1.0) || !(c > 0.0)) throw PreconditionError("envelope needs c > 0 and d_w > 1");
  ScalingResidual out;
  for (const auto& a : curve.samples) {
    for (const auto& b : curve.samples) {
      if (std::abs(b.x - a.x * beta) > 1e-9 * std::abs(b.x)) continue;
      const double lo = alpha * b.lo, hi = alpha * b.hi;
      const double res = (a.lo == a.hi && b.lo == b.hi) ? std::abs(a.lo - lo)
                                                         : std::max(0.0, std::max(a.lo, lo) - std::min(a.hi, hi));
      const double s = std::pow(a.x, -1.0 / (d_w - 1.0));
      const bool ok = res <= c * std::exp(-C * s);
      out.x.push_back(a.x);
      out.residual.push_back(res);
      out.within.push_back(ok);
      out.all_within = out.all_within && ok;
      out.max_residual = std::max(out.max_residual, res);
      if (res > 0.0) out.max_admissible_C = std::min(out.max_admissible_C, std::log(c / res) / s);
    }
  }
  if (out.x.empty()) throw PreconditionError("grid is not aligned to beta: no sample pairs (t, beta t)");
  return out;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("linear fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw PreconditionError("linear fit needs distinct abscissas");
  LinearFit f;
  f.n = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

}  // namespace fbv
