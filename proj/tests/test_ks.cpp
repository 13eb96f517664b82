#include <doctest.h>

#include "fbv/errors.hpp"
#include "fbv/ks.hpp"

#include <cmath>

using namespace fbv;

namespace {

bool meets(const MassInterval& m, double lo, double hi) { return m.lo <= hi && lo <= m.hi; }

const EngineOptions kFast{10, 0.0, true};

double periodic_start(const FractalSystem& sys) {
  const auto [a, b] = reference_pair(sys);
  return sys.L * localization_threshold(sys, a, b);
}

}  // namespace

TEST_CASE("geometric grids") {
  const auto g = geometric_grid(1.0, 2.0, 4, 2);
  REQUIRE(g.size() == 8);
  CHECK(g[0] == 1.0);
  CHECK(g[4] == doctest::Approx(0.5).epsilon(1e-15));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] < g[i - 1]);
  const auto b = geometric_grid_between(1.0, 0.25, 2.0, 2);
  REQUIRE(b.size() == 5);
  CHECK(b.back() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(geometric_grid(1.0, 1.0, 4, 2), PreconditionError);
  CHECK_THROWS_AS(geometric_grid_between(1.0, 2.0, 2.0, 2), PreconditionError);
}

TEST_CASE("ks_pair elementary values") {
  const auto sg = build_preset(Preset::sierpinski, 0);
  const Cell K({}, 0);
  for (double r : {1.0, 1.5, 3.0}) {
    const auto v = ks_pair(sg, K, K, r);
    CHECK(v.lo == doctest::Approx(std::pow(r, -sg.d_h)).epsilon(1e-14));
    CHECK(v.hi == doctest::Approx(std::pow(r, -sg.d_h)).epsilon(1e-14));
  }
  const auto zero = ks_pair(sg, Cell({1, 1}, 0), Cell({2, 2}, 0), 0.2);
  CHECK(zero.hi == 0.0);

  // Frozen independent Monte Carlo: P(|x - y| <= 2^-5) for x in K1, y in K2 lies in this 99% interval.
  const double r = 0.03125;
  const auto g = ks_pair(sg, Cell({1}, 0), Cell({2}, 0), r, {12, 0.0, true});
  const double s = std::pow(r, -sg.d_h) / 9.0;
  CHECK(meets(g, 6.61740731e-05 * s, 8.00893196e-05 * s));
}

TEST_CASE("localization thresholds") {
  const auto sg = build_preset(Preset::sierpinski, 1);
  const auto [a, b] = reference_pair(sg);
  const double r0 = localization_threshold(sg, a, b);
  // The closest non-touching child pair of two adjacent level-1 cells sits a quarter apart.
  CHECK(r0 > 0.1);
  CHECK(r0 <= 0.125);
  const auto [ca, cb] = touching_children(sg, a, b);
  CHECK(shared_point(sg, ca, cb).has_value());
  CHECK(ca.level() == a.level() + 1);
  CHECK_THROWS_AS(touching_children(sg, Cell({1, 1}, 1), Cell({2, 2}, 1)), PreconditionError);

  // Below the threshold the pair mass is carried by the touching children alone.
  for (double r : {0.9 * r0, 0.5 * r0, 0.2 * r0}) {
    const auto whole = pair_mass(sg, a, b, r, kFast);
    const auto local = pair_mass(sg, ca, cb, r, kFast);
    CHECK(meets(whole, local.lo, local.hi));
  }
}

TEST_CASE("exact log-periodicity below the threshold") {
  for (auto preset : {Preset::sierpinski, Preset::vicsek}) {
    const auto sys = build_preset(preset, 1);
    const auto [a, b] = reference_pair(sys);
    const auto grid = geometric_grid(periodic_start(sys), sys.L, 4, 3);
    const Curve curve = normalized_profile(sys, a, b, grid, kFast);
    const auto rep = periodicity_check(curve, sys.L);
    CHECK(rep.comparisons == 8);
    CHECK(rep.exact());
    for (const auto& s : curve.samples) {
      CHECK(s.lo > 0.0);
      CHECK(s.lo <= s.hi);
    }
  }
}

TEST_CASE("oscillation report") {
  Curve flat;
  for (int i = 0; i < 8; ++i) flat.samples.push_back({std::pow(0.5, i), 2.0, 2.0});
  const auto none = oscillation_amplitude(flat, std::log(2.0));
  CHECK(none.amplitude == 0.0);
  CHECK_FALSE(none.certified);
  CHECK(none.mean == 2.0);

  Curve wavy = flat;
  wavy.samples[3] = {wavy.samples[3].x, 3.0, 3.1};
  const auto some = oscillation_amplitude(wavy);
  CHECK(some.amplitude == doctest::Approx(1.0));
  CHECK(some.x_of_max == wavy.samples[3].x);
  CHECK(some.certified);

  // A real profile over one period at moderate depth: non-constant with a positive certified gap.
  const auto sg = build_preset(Preset::sierpinski, 1);
  const auto [a, b] = reference_pair(sg);
  const Curve curve = normalized_profile(sg, a, b, geometric_grid(periodic_start(sg), 2.0, 16, 1), kFast);
  const auto osc = oscillation_amplitude(curve, std::log(2.0));
  CHECK(osc.amplitude > 0.0);
  CHECK(osc.x_of_max != osc.x_of_min);
}

TEST_CASE("subsequence limits") {
  const auto sg = build_preset(Preset::sierpinski, 1);
  const auto [a, b] = reference_pair(sg);
  const auto phases = standard_phases(sg);
  CHECK(phases[0] == 1.0);
  CHECK(phases[1] == doctest::Approx(0.75));
  const auto rep = subsequence_limits(sg, a, b, phases, {4, 5}, kFast);
  REQUIRE(rep.phases.size() == 2);
  for (const auto& p : rep.phases) {
    CHECK(p.values.size() == 2);
    CHECK(p.common.lo <= p.common.hi);
  }
  CHECK(rep.predicted_ratio == doctest::Approx(1.0 + 2.0 / 3.0));
  CHECK(rep.measured_ratio.lo > 1.0);
  CHECK_THROWS_AS(subsequence_limits(sg, a, b, {0.4}, {5}, kFast), PreconditionError);
  CHECK_THROWS_AS(subsequence_limits(sg, a, b, {1.0}, {0}, kFast), ThresholdExceeded);
  CHECK_THROWS_AS(subsequence_limits(sg, a, b, {}, {5}, kFast), PreconditionError);
}

TEST_CASE("union functional: decomposition against direct summation") {
  for (auto preset : {Preset::sierpinski, Preset::vicsek}) {
    const auto sys = build_preset(preset, 2);
    const CellUnion U = example_union(sys, "single");
    const double thr = union_threshold(sys, U);
    CHECK(thr > 0.0);
    for (double r : {0.8 * thr, 0.3 * thr}) {
      const auto split = ks_union(sys, U, r, kFast);
      const auto direct = ks_union(sys, U, r, kFast, true);
      CHECK(meets(split, direct.lo, direct.hi));
      CHECK(split.lo >= 0.0);
    }
    CHECK_THROWS_AS(ks_union(sys, U, 4.0 * thr, kFast), ThresholdExceeded);
    CHECK_THROWS_AS(ks_union(sys, U, 0.0, kFast), PreconditionError);
  }
  const auto sg = build_preset(Preset::sierpinski, 2);
  const auto empty = ks_union(sg, CellUnion{}, 0.1, kFast);
  CHECK(empty.lo == 0.0);
  CHECK(empty.hi == 0.0);
}

TEST_CASE("boundary count recovery for the example unions") {
  // Points where each union meets its complement. Vicsek: a corner square only touches the rest
  // through the corners it shares with a centre square, so dead-end corners do not count.
  const std::pair<const char*, int> sg_expected[] = {{"single", 3}, {"pair", 4}, {"staircase", 8}, {"mixed", 5}};
  const std::pair<const char*, int> vs_expected[] = {{"single", 4}, {"pair", 4}, {"staircase", 4}, {"mixed", 2}};
  for (auto preset : {Preset::sierpinski, Preset::vicsek}) {
    const auto sys = build_preset(preset, 2);
    const auto [a, b] = reference_pair(sys);
    const double r0 = localization_threshold(sys, a, b);
    const auto& expected = preset == Preset::sierpinski ? sg_expected : vs_expected;
    for (const auto& [name, count] : expected) {
      CAPTURE(name);
      const CellUnion U = example_union(sys, name);
      const double limit = std::min(union_threshold(sys, U), std::pow(sys.L, 2 - U.level()) * r0);
      const auto rec = boundary_recovery(sys, U, 0.9 * limit, {12, 0.0, true});
      CHECK(rec.boundary_count == count);
      CHECK(rec.estimate.contains(count));
      CHECK(rec.recovered());
    }
  }
  const auto sg = build_preset(Preset::sierpinski, 2);
  CHECK_THROWS_AS(boundary_recovery(sg, example_union(sg, "single"), 1.0), ThresholdExceeded);
  CHECK_THROWS_AS(example_union(sg, "nope"), PreconditionError);
}

TEST_CASE("psi profile") {
  Curve c;
  c.samples = {{0.5, 2.0, 2.0}, {0.25, 1.0, 4.0}};
  const auto psi = psi_profile(c);
  CHECK(psi.scale == Abscissa::log);
  CHECK(psi.samples[0].x == doctest::Approx(std::log(2.0)));
  CHECK(psi.samples[0].lo == 0.25);
  CHECK(psi.samples[0].hi == 0.25);
  CHECK(psi.samples[1].lo == 0.125);
  CHECK(psi.samples[1].hi == 0.5);
  c.samples.push_back({0.125, 0.0, 1.0});
  CHECK_THROWS_AS(psi_profile(c), PreconditionError);
}

TEST_CASE("pair value is invariant under the symmetries of the gasket") {
  // Reflection across the vertical axis swaps K1 and K2 and fixes K3.
  const auto sg = build_preset(Preset::sierpinski, 0);
  const double r = 0.07;
  const auto a = pair_mass(sg, Cell({1}, 0), Cell({3}, 0), r, kFast);
  const auto b = pair_mass(sg, Cell({2}, 0), Cell({3}, 0), r, kFast);
  const auto c = pair_mass(sg, Cell({1}, 0), Cell({2}, 0), r, kFast);
  CHECK(meets(a, b.lo, b.hi));
  CHECK(meets(a, c.lo, c.hi));
}
