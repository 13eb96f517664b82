#include <doctest.h>

#include "fbv/errors.hpp"
#include "fbv/measure.hpp"

#include <cmath>
#include <random>

using namespace fbv;

namespace {

// Frozen Monte Carlo oracles: 10^7 pairs drawn by an independent sampler (30 uniform random
// symbols applied to a vertex), 99% Wilson intervals of the hit fraction.
struct FrozenOracle {
  double lo, hi;
};
constexpr FrozenOracle kSgAdjacent_r4{0.000598380618, 0.000638882051};   // K1 x K2, r = 2^-4
constexpr FrozenOracle kSgAdjacent_r5{6.61740731e-05, 8.00893196e-05};   // K1 x K2, r = 2^-5
constexpr FrozenOracle kSgCentroidBall{0.503465435, 0.504279959};        // mu(B(centroid, 0.3))
constexpr FrozenOracle kVsCornerCentre{0.00356872672, 0.00366653197};   // K1 x K5, r = 0.1

bool meets(const MassInterval& m, double lo, double hi) { return m.lo <= hi && lo <= m.hi; }

}  // namespace

TEST_CASE("bounding balls") {
  const auto sg = build_preset(Preset::sierpinski, 0);
  const auto root = cell_bounding_ball(sg, Cell({}, 0));
  CHECK(root.radius == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(distance(root.center, {0.5, std::sqrt(3.0) / 6}) < 1e-12);
  CHECK(cell_bounding_ball(sg, Cell({1, 2, 3}, 0)).radius == doctest::Approx(0.125 / std::sqrt(3.0)).epsilon(1e-12));

  const auto vs = build_preset(Preset::vicsek, 0);
  const auto sq = cell_bounding_ball(vs, Cell({}, 0));
  CHECK(sq.radius == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-12));
  CHECK(distance(sq.center, {0.5, 0.5}) < 1e-12);

  // Every sampled deep point of a cell lies in its ball.
  std::mt19937_64 rng(5);
  for (const auto* sys : {&sg, &vs}) {
    std::uniform_int_distribution<int> d(1, sys->M);
    for (int t = 0; t < 200; ++t) {
      Word w(3);
      for (auto& s : w) s = d(rng);
      const auto ball = cell_bounding_ball(*sys, Cell(w, 0));
      Word deep = w;
      for (int i = 0; i < 12; ++i) deep.push_back(d(rng));
      CHECK(distance(apply_word(*sys, deep, sys->essential_vertices[0]), ball.center) <= ball.radius * (1 + 1e-12));
    }
  }
}

TEST_CASE("pair_mass trivial cases") {
  const auto sg = build_preset(Preset::sierpinski, 0);
  const Cell K({}, 0);
  const auto full = pair_mass(sg, K, K, 1.0);
  CHECK(full.lo == 1.0);
  CHECK(full.hi == 1.0);
  const auto far = pair_mass(sg, K, K, 5.0);
  CHECK(far.lo == 1.0);
  CHECK(far.hi == 1.0);

  const auto separated = pair_mass(sg, Cell({1, 1}, 0), Cell({2, 2}, 0), 0.1);
  CHECK(separated.lo == 0.0);
  CHECK(separated.hi == 0.0);
  CHECK_THROWS_AS(pair_mass(sg, K, K, 0.0), PreconditionError);
  CHECK_THROWS_AS(pair_mass(sg, K, K, 0.1, {15, 0.0, false}), PreconditionError);
}

TEST_CASE("pair_mass against frozen Monte Carlo oracles") {
  const auto sg = build_preset(Preset::sierpinski, 0);
  const Cell k1({1}, 0), k2({2}, 0);
  const double w = 1.0 / 9.0;
  const auto g4 = pair_mass(sg, k1, k2, 0.0625, {12, 0.0, true});
  CHECK(meets(g4, w * kSgAdjacent_r4.lo, w * kSgAdjacent_r4.hi));
  CHECK(g4.width() < 0.2 * g4.mid());
  const auto g5 = pair_mass(sg, k1, k2, 0.03125, {12, 0.0, true});
  CHECK(meets(g5, w * kSgAdjacent_r5.lo, w * kSgAdjacent_r5.hi));

  const auto vs = build_preset(Preset::vicsek, 0);
  const auto gv = pair_mass(vs, Cell({1}, 0), Cell({5}, 0), 0.1, {9, 0.0, true});
  CHECK(meets(gv, kVsCornerCentre.lo / 25, kVsCornerCentre.hi / 25));

  const auto ball = ball_mass(sg, {0.5, std::sqrt(3.0) / 6}, 0.3, Cell({}, 0), {12, 0.0, false});
  CHECK(meets(ball, kSgCentroidBall.lo, kSgCentroidBall.hi));
  CHECK(ball.width() < 0.02);
}

TEST_CASE("library Monte Carlo agrees with the engine and is reproducible") {
  const auto sg = build_preset(Preset::sierpinski, 0);
  const Cell k1({1}, 0), k2({2}, 0);
  const auto a = mc_pair_mass(sg, k1, k2, 0.1, 200000, 42, kZ99, 1);
  const auto b = mc_pair_mass(sg, k1, k2, 0.1, 200000, 42, kZ99, 4);
  CHECK(a.hits == b.hits);
  CHECK(a.estimate == b.estimate);
  const auto engine = pair_mass(sg, k1, k2, 0.1, {11, 0.0, true});
  CHECK(meets(engine, a.ci_lo, a.ci_hi));
  CHECK(mc_pair_mass(sg, k1, k2, 0.1, 200000, 43, kZ99, 1).hits != a.hits);

  const auto mb = mc_ball_mass(sg, {0.5, 0.0}, 0.2, Cell({}, 0), 2000000, 1, kZ99, 4);
  CHECK(meets(ball_mass(sg, {0.5, 0.0}, 0.2, Cell({}, 0), {12, 0.0, false}), mb.ci_lo, mb.ci_hi));
}

TEST_CASE("wilson interval") {
  // Closed form for 50/100 at z = 1.96: centre 0.5, half-width 0.0961698.
  const auto [lo, hi] = wilson_interval(50, 100, 1.96);
  CHECK(lo == doctest::Approx(0.5 - 0.0961698).epsilon(1e-6));
  CHECK(hi == doctest::Approx(0.5 + 0.0961698).epsilon(1e-6));
  const auto [z0, z1] = wilson_interval(0, 1000, kZ99);
  CHECK(z0 == 0.0);
  CHECK(z1 > 0.0);
  CHECK(derive_seed(0, 1) != derive_seed(0, 2));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("ball_mass trivial cases") {
  const auto sg = build_preset(Preset::sierpinski, 0);
  const Cell K({}, 0);
  // The closed ball of radius 2^-k about a corner contains the level-k corner cell.
  for (int k = 2; k <= 6; ++k) {
    const auto m = ball_mass(sg, {0.0, 0.0}, std::pow(2.0, -k), K, {k + 8, 0.0, false});
    CHECK(m.hi >= std::pow(3.0, -k));
    CHECK(m.lo >= 0.9 * std::pow(3.0, -k));
    const auto wider = ball_mass(sg, {0.0, 0.0}, std::pow(2.0, -k) * (0.5 + 1 / std::sqrt(3.0)) * 2, K, {k + 2, 0.0, false});
    CHECK(wider.lo >= std::pow(3.0, -k) * (1 - 1e-12));
  }
  const auto all = ball_mass(sg, {3.0, 3.0}, 10.0, K);
  CHECK(all.lo == 1.0);
  CHECK(all.hi == 1.0);
  const auto none = ball_mass(sg, {3.0, 3.0}, 0.5, K);
  CHECK(none.hi == 0.0);
}

TEST_CASE("symmetry, scaling and monotonicity of the engine") {
  std::mt19937_64 rng(99);
  for (auto preset : {Preset::sierpinski, Preset::vicsek}) {
    const auto sys = build_preset(preset, 1);
    const auto cells = cells_at_level(sys, 2);
    std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
    std::uniform_real_distribution<double> radius(0.02, 0.4);
    for (int t = 0; t < 12; ++t) {
      const Cell a = cells[pick(rng)], b = cells[pick(rng)];
      const double r = radius(rng);
      const EngineOptions opts{8, 0.0, false};
      const auto ab = pair_mass(sys, a, b, r, opts);
      const auto ba = pair_mass(sys, b, a, r, opts);
      CHECK(ab.lo == ba.lo);
      CHECK(ab.hi == ba.hi);
      CHECK(0.0 <= ab.lo);
      CHECK(ab.lo <= ab.hi);

      // G(psi(A), psi(B), r / L) = M^-2 G(A, B, r) for every level-1 map.
      for (int m = 1; m <= sys.M; ++m) {
        const auto img = pair_mass(sys, a.mapped(m), b.mapped(m), r / sys.L, {9, 0.0, false});
        const double f = 1.0 / (sys.M * sys.M);
        CHECK(meets(img, ab.lo * f, ab.hi * f));
      }

      // Nested radii: upper bounds never decrease beyond the widths.
      const auto bigger = pair_mass(sys, a, b, r * 1.3, opts);
      CHECK(ab.hi <= bigger.hi + ab.width() + bigger.width());
      CHECK(ab.lo <= bigger.hi);

      const auto memo = pair_mass(sys, a, b, r, {8, 0.0, true});
      CHECK(meets(memo, ab.lo, ab.hi));
    }
  }
}

TEST_CASE("interval width shrinks with depth") {
  const auto sg = build_preset(Preset::sierpinski, 1);
  const auto [a, b] = reference_pair(sg);
  double previous = std::numeric_limits<double>::infinity();
  for (int depth = 6; depth <= 12; depth += 2) {
    const auto m = pair_mass(sg, a, b, 0.17, {depth, 0.0, true});
    CHECK(m.width() < 0.6 * previous);
    previous = m.width();
  }
  // A width target stops deepening early.
  const auto coarse = pair_mass(sg, a, b, 0.17, {12, 1e-3, true});
  CHECK(coarse.width() <= 1e-3);
  CHECK(coarse.depth_reached < 12);
}

TEST_CASE("Ahlfors regularity probe") {
  std::mt19937_64 rng(2024);
  for (auto preset : {Preset::sierpinski, Preset::vicsek}) {
    const auto sys = build_preset(preset, 0);
    std::uniform_int_distribution<int> sym(1, sys.M);
    std::uniform_real_distribution<double> logr(-8.0, 0.0);
    double c = std::numeric_limits<double>::infinity(), C = 0.0;
    for (int t = 0; t < 50; ++t) {
      Word w(24);
      for (auto& s : w) s = sym(rng);
      const Vec2 x = apply_word(sys, w, sys.essential_vertices[0]);
      const double r = std::pow(sys.L, logr(rng));
      const int depth = std::min(14, static_cast<int>(std::ceil(-std::log(r) / std::log(sys.L))) + 5);
      const auto m = ball_mass(sys, x, r, Cell({}, 0), {depth, 0.0, false});
      c = std::min(c, m.lo / std::pow(r, sys.d_h));
      C = std::max(C, m.hi / std::pow(r, sys.d_h));
    }
    CHECK(c > 0.0);
    CHECK(C / c < 100.0);
  }
}

TEST_CASE("cell distance bounds") {
  const auto sg = build_preset(Preset::sierpinski, 0);
  const auto gap = cell_distance(sg, Cell({1, 1}, 0), Cell({2, 2}, 0), 8);
  CHECK(gap.lo <= 0.5);
  CHECK(gap.hi >= 0.5 - 1e-12);
  CHECK(gap.hi - gap.lo < 0.01);
  const auto touching = cell_distance(sg, Cell({1}, 0), Cell({2}, 0), 6);
  CHECK(touching.lo == 0.0);
  CHECK(touching.hi < 1e-12);
}

TEST_CASE("the whole window has mass M") {
  for (auto preset : {Preset::sierpinski, Preset::vicsek}) {
    const auto sys = build_preset(preset, 1);
    std::vector<Cell> copies;
    for (int m = 1; m <= sys.M; ++m) copies.push_back(Cell({m}, 1));
    const CellUnion W(copies);
    const Cell K({1}, 1);
    const double M = sys.M;
    const auto whole = pair_mass(sys, W, W, 10.0 * sys.L);
    CHECK(whole.lo == M * M);
    CHECK(whole.hi == M * M);
    const auto half = pair_mass(sys, W, CellUnion({K}), 10.0 * sys.L);
    CHECK(half.lo == M);
    CHECK(half.hi == M);
    // The window is K scaled by L, so radii scale with it.
    for (double r : {0.1, 0.37, 0.8}) {
      const auto lifted = pair_mass(sys, W, W, r * sys.L, {6, 0.0, true});
      const auto base = pair_mass(sys, K, K, r, {7, 0.0, true});
      CHECK(meets(lifted, base.lo * M * M, base.hi * M * M));
    }
    CHECK_THROWS_AS(pair_mass(sys, Cell(Word(kMaxDepth + 3, 1), 1), K, 0.5), PreconditionError);
  }
}

TEST_CASE("directed rounding brackets the exact result") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1e-3, 1e3);
  for (int i = 0; i < 2000; ++i) {
    const double a = u(rng), b = u(rng);
    const long double ea = a, eb = b;
    CHECK(static_cast<long double>(add_down(a, b)) <= ea + eb);
    CHECK(static_cast<long double>(add_up(a, b)) >= ea + eb);
    CHECK(static_cast<long double>(mul_down(a, b)) <= ea * eb);
    CHECK(static_cast<long double>(mul_up(a, b)) >= ea * eb);
    CHECK(add_up(a, b) - add_down(a, b) <= 2.0 * std::nextafter(a + b, 1e300) - 2.0 * (a + b));
  }
  // Exact operations stay exact.
  CHECK(add_down(0.5, 0.25) == 0.75);
  CHECK(mul_up(3.0, 0.5) == 1.5);
  CHECK(div_down(1.0, 4.0) == 0.25);
  CHECK(div_up(1.0, 3.0) > 1.0 / 3.0);
  CHECK(div_down(1.0, 3.0) < div_up(1.0, 3.0));
  const MassInterval m{1.0, 1.0, 0, 0};
  const auto s = m.scaled(0.1, 1e-15);
  CHECK(s.lo < 0.1);
  CHECK(s.hi > 0.1);
}
