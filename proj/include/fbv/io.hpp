#pragma once

#include "fbv/heat.hpp"
#include "fbv/ks.hpp"
#include "fbv/renewal.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fbv {

/// Fixed 9-significant-digit rendering used by every CSV column.
std::string format_number(double v);

/// r, neg_ln_r, phase, N_lo, N_hi, width. Phase is (-ln r) mod period_log, measured from the first sample.
void write_curve_csv(const Curve& curve, double period_log, const std::filesystem::path& path);
/// t, neg_ln_t, k_steps, value, rescaled_value
void write_heat_csv(const HeatCurve& curve, const std::filesystem::path& path);
/// Heat columns plus exits, samples, ci_lo, ci_hi. value is the exit probability, rescaled_value
/// the scaled distance (d^{d_w}/t)^{1/(d_w-1)} that the tail fit uses as abscissa.
void write_hitting_csv(const HittingTail& tail, const std::filesystem::path& path);
/// phase, mean, spread, n_samples
void write_fold_csv(const PhaseProfile& profile, const std::filesystem::path& path);

/// Reads a curve from any of the CSVs above (KS intervals or heat rescaled values) or a plain
/// two-column `x,y` file. Abscissas are returned as written (r or t, not logged).
Curve read_curve_csv(const std::filesystem::path& path);

/// Polyline plot over -ln x; interval curves get a lo and a hi polyline.
void write_svg(const Curve& curve, const std::filesystem::path& path, const std::string& title = "");

/// Space-separated key=value pairs, in insertion order.
class Summary {
 public:
  Summary& add(const std::string& key, const std::string& value);
  Summary& add(const std::string& key, const char* value) { return add(key, std::string(value)); }
  Summary& add(const std::string& key, double value);
  Summary& add(const std::string& key, long long value);
  Summary& add(const std::string& key, int value) { return add(key, static_cast<long long>(value)); }
  Summary& add(const std::string& key, std::size_t value) { return add(key, static_cast<long long>(value)); }
  Summary& add(const std::string& key, bool value);
  std::string str() const;

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

}  // namespace fbv
