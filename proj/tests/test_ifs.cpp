#include <doctest.h>

#include "fbv/errors.hpp"
#include "fbv/ifs.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <set>

using namespace fbv;

namespace {

const double kH = std::sqrt(3.0) / 2.0;

// Independent vertex enumeration: composes the maps by hand and deduplicates on a 1e-9 lattice.
struct Enumerated {
  std::size_t vertices = 0;
  std::size_t edges = 0;
};

Enumerated enumerate_graph(const std::vector<Vec2>& anchors, double ratio, const std::vector<Vec2>& v0, int N) {
  using Key = std::pair<long long, long long>;
  auto key = [](Vec2 p) { return Key{std::llround(p.x * 1e9), std::llround(p.y * 1e9)}; };
  std::set<Key> verts;
  std::set<std::pair<Key, Key>> edges;
  std::function<void(double, Vec2, int)> go = [&](double s, Vec2 t, int depth) {
    if (depth == 0) {
      std::vector<Key> ks;
      for (const auto& v : v0) ks.push_back(key(v * s + t));
      for (const auto& k : ks) verts.insert(k);
      for (std::size_t i = 0; i < ks.size(); ++i)
        for (std::size_t j = i + 1; j < ks.size(); ++j) edges.insert(std::minmax(ks[i], ks[j]));
      return;
    }
    // x -> s (ratio x + (1 - ratio) q) + t
    for (const auto& q : anchors) go(s * ratio, t + q * (s * (1.0 - ratio)), depth - 1);
  };
  go(1.0, {0.0, 0.0}, N);
  return {verts.size(), edges.size()};
}

SystemConfig sierpinski_config() {
  SystemConfig c;
  c.name = "gasket";
  c.L = 2.0;
  c.d_w = std::log(5.0) / std::log(2.0);
  c.diam = 1.0;
  c.essential_vertices = {{0, 0}, {1, 0}, {0.5, kH}};
  for (const auto& q : c.essential_vertices) c.maps.push_back({0.5, 0.0, q * 0.5});
  return c;
}

SystemConfig vicsek_config() {
  SystemConfig c;
  c.name = "cross";
  c.L = 3.0;
  c.d_w = std::log(15.0) / std::log(3.0);
  c.diam = std::sqrt(2.0);
  const std::vector<Vec2> q = {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {0.5, 0.5}};
  for (const auto& p : q) c.maps.push_back({1.0 / 3.0, 0.0, p * (2.0 / 3.0)});
  c.essential_vertices = {q[0], q[1], q[2], q[3]};
  return c;
}

Cell cell_with_center(const FractalSystem& sys, int level, Vec2 c) {
  for (const auto& cell : cells_at_level(sys, level))
    if (distance(cell_center(sys, cell), c) < 1e-9) return cell;
  FAIL("no cell with that centre");
  return {};
}

}  // namespace

TEST_CASE("preset parameters") {
  const auto sg = build_preset(Preset::sierpinski);
  CHECK(sg.L == 2.0);
  CHECK(sg.M == 3);
  CHECK(std::abs(sg.d_h - std::log(3.0) / std::log(2.0)) < 1e-12);
  CHECK(std::abs(sg.d_w - std::log(5.0) / std::log(2.0)) < 1e-12);
  CHECK(sg.R == 2);
  CHECK(std::abs(sg.rho() - 5.0 / 3.0) < 1e-12);
  CHECK(sg.vertex_count() == 3);

  const auto vs = build_preset("vicsek");
  CHECK(vs.L == 3.0);
  CHECK(vs.M == 5);
  CHECK(std::abs(vs.d_h - std::log(5.0) / std::log(3.0)) < 1e-12);
  CHECK(std::abs(vs.d_w - std::log(15.0) / std::log(3.0)) < 1e-12);
  CHECK(vs.R == 1);
  CHECK(std::abs(vs.rho() - 3.0) < 1e-12);
  CHECK(vs.diam == doctest::Approx(std::sqrt(2.0)));

  CHECK(build_preset("sg").name == "sierpinski");
  CHECK_THROWS_AS(build_preset("koch"), PreconditionError);
}

TEST_CASE("similitudes are orthogonal contractions") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (auto p : {Preset::sierpinski, Preset::vicsek}) {
    const auto sys = build_preset(p);
    for (const auto& m : sys.maps) {
      const Mat2 rrt = m.rotation * m.rotation.transposed();
      CHECK(std::abs(rrt.a - 1) < 1e-12);
      CHECK(std::abs(rrt.b) < 1e-12);
      CHECK(std::abs(rrt.d - 1) < 1e-12);
      for (int i = 0; i < 20; ++i) {
        const Vec2 x{u(rng), u(rng)}, y{u(rng), u(rng)};
        CHECK(std::abs(distance(m.apply(x), m.apply(y)) - m.contraction * distance(x, y)) < 1e-12 * distance(x, y));
      }
    }
    // Every essential vertex is the fixed point of exactly one map.
    for (const auto& v : sys.essential_vertices) {
      int fixed = 0;
      for (const auto& m : sys.maps) fixed += distance(m.fixed_point(), v) < 1e-12;
      CHECK(fixed == 1);
    }
  }
}

TEST_CASE("apply_word") {
  const auto sg = build_preset(Preset::sierpinski, 0);
  const Vec2 q3{0.5, kH};
  CHECK(apply_word(sg, {}, {0.3, 0.7}) == Vec2{0.3, 0.7});
  CHECK(norm(apply_word(sg, {1}, {0, 0})) == 0.0);
  // psi_1(psi_2(q3)) by hand: psi_2(q3) = (0.75, h/2), then halve.
  const Vec2 v = apply_word(sg, {1, 2}, q3);
  CHECK(v.x == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(v.y == doctest::Approx(std::sqrt(3.0) / 8.0).epsilon(1e-15));

  SUBCASE("words contract by L^-n") {
    std::mt19937_64 rng(11);
    for (auto p : {Preset::sierpinski, Preset::vicsek}) {
      const auto sys = build_preset(p, 0);
      std::uniform_int_distribution<int> sym(1, sys.M);
      std::uniform_real_distribution<double> u(-1.0, 2.0);
      for (int trial = 0; trial < 50; ++trial) {
        Word w(1 + trial % 9);
        for (auto& s : w) s = sym(rng);
        const Vec2 x{u(rng), u(rng)}, y{u(rng), u(rng)};
        const double expect = std::pow(sys.L, -static_cast<double>(w.size())) * distance(x, y);
        CHECK(std::abs(distance(apply_word(sys, w, x), apply_word(sys, w, y)) - expect) <= 1e-10 * expect);
      }
    }
  }
}

TEST_CASE("cells_at_level counts") {
  CHECK(cells_at_level(build_preset(Preset::sierpinski, 0), 2).size() == 9);
  CHECK(cells_at_level(build_preset(Preset::vicsek, 0), 1).size() == 5);
  CHECK(cells_at_level(build_preset(Preset::sierpinski, 1), 1).size() == 9);
  CHECK(cells_at_level(build_preset(Preset::vicsek, 2), 0).size() == 25);
  CHECK_THROWS_AS(cells_at_level(build_preset(Preset::sierpinski, 0), 8, 1000), CapExceeded);
}

TEST_CASE("cell measure and unions") {
  const auto sg = build_preset(Preset::sierpinski, 1);
  const Cell c({1, 2, 3}, 1);
  CHECK(c.level() == 2);
  CHECK(cell_measure(sg, c) == Rational{1, 9});
  CHECK(cell_vertices(sg, c).size() == 3);
  for (const auto& cell : cells_at_level(sg, 3)) CHECK(cell_measure(sg, cell).value() == doctest::Approx(1.0 / 27));

  const CellUnion u({Cell({1, 1}, 1), Cell({1, 2}, 1)});
  CHECK(u.measure(sg) == Rational{2, 3});
  CHECK_THROWS_AS(CellUnion({Cell({1, 1}, 1), Cell({1, 1}, 1)}), PreconditionError);
  CHECK_THROWS_AS(CellUnion({Cell({1, 1}, 1), Cell({1, 2, 1}, 1)}), PreconditionError);

  const auto mixed = CellUnion::refined_from(sg, {Cell({1, 1}, 1), Cell({1, 2, 1}, 1)});
  CHECK(mixed.level() == 2);
  CHECK(mixed.size() == 4);
  CHECK(mixed.measure(sg) == Rational{4, 9});
  CHECK_THROWS_AS(CellUnion::refined_from(sg, {Cell({1, 1}, 1), Cell({1, 1, 2}, 1)}), PreconditionError);
  CHECK(u.refined(sg, 3).size() == 18);
}

TEST_CASE("shared_point") {
  const auto sg = build_preset(Preset::sierpinski, 0);
  const auto p = shared_point(sg, Cell({1}, 0), Cell({2}, 0));
  REQUIRE(p);
  CHECK(distance(*p, {0.5, 0.0}) < 1e-12);
  CHECK_THROWS_AS(shared_point(sg, Cell({1}, 0), Cell({1}, 0)), PreconditionError);

  const auto vs = build_preset(Preset::vicsek, 0);
  const Cell corner_a = cell_with_center(vs, 1, {1.0 / 6, 1.0 / 6});
  const Cell corner_b = cell_with_center(vs, 1, {5.0 / 6, 5.0 / 6});
  const Cell middle = cell_with_center(vs, 1, {0.5, 0.5});
  CHECK_FALSE(shared_point(vs, corner_a, corner_b));
  const auto q = shared_point(vs, corner_a, middle);
  REQUIRE(q);
  CHECK(distance(*q, {1.0 / 3, 1.0 / 3}) < 1e-12);
}

TEST_CASE("nesting: distinct same-level cells share at most one point") {
  for (auto preset : {Preset::sierpinski, Preset::vicsek}) {
    const auto sys = build_preset(preset, 1);
    const auto cells = cells_at_level(sys, 2);
    std::size_t touching = 0;
    for (std::size_t a = 0; a < cells.size(); ++a)
      for (std::size_t b = a + 1; b < cells.size(); ++b) touching += shared_point(sys, cells[a], cells[b]).has_value();
    CHECK(touching > 0);
  }
}

TEST_CASE("boundary_points against direct vertex enumeration") {
  // Oracle: a vertex of U is a boundary point iff it is also a vertex of some same-level cell outside U.
  auto oracle = [](const FractalSystem& sys, const CellUnion& U) {
    std::set<std::pair<long long, long long>> inside, outside, both;
    auto key = [](Vec2 p) { return std::pair{std::llround(p.x * 1e8), std::llround(p.y * 1e8)}; };
    for (const auto& c : cells_at_level(sys, U.level())) {
      for (const auto& v0 : sys.essential_vertices) {
        Word w = c.word();
        const Vec2 v = apply_word(sys, w, v0);
        (U.contains(c) ? inside : outside).insert(key(v));
      }
    }
    for (const auto& k : inside)
      if (outside.count(k)) both.insert(k);
    return both.size();
  };

  const auto sg = build_preset(Preset::sierpinski, 1);
  const CellUnion single({cell_with_center(sg, 1, {0.75, kH / 6})});
  CHECK(oracle(sg, single) == 3);
  CHECK(boundary_points(sg, single).size() == 3);

  const auto vs = build_preset(Preset::vicsek, 1);
  const CellUnion central({cell_with_center(vs, 1, {0.5, 0.5})});
  CHECK(oracle(vs, central) == 4);
  CHECK(boundary_points(vs, central).size() == 4);

  const auto sg2 = build_preset(Preset::sierpinski, 2);
  const auto cells = cells_at_level(sg2, 2);
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Cell> pick;
    for (const auto& c : cells)
      if (rng() % 5 == 0) pick.push_back(c);
    if (pick.empty()) continue;
    const CellUnion U(pick);
    try {
      const auto n = boundary_points(sg2, U).size();
      CHECK(n == oracle(sg2, U));
      ++checked;
    } catch (const WindowTooSmall&) {
    }
  }
  CHECK(checked > 5);

  CHECK_THROWS_AS(boundary_points(sg, CellUnion(cells_at_level(sg, 0))), WindowTooSmall);
  CHECK(boundary_points(sg, CellUnion{}).empty());
}

TEST_CASE("boundary additivity for separated unions") {
  const auto sg = build_preset(Preset::sierpinski, 2);
  const CellUnion a({cell_with_center(sg, 1, {0.75, kH / 6})});
  const CellUnion b({cell_with_center(sg, 1, {2.25, kH / 6})});
  CHECK_FALSE(shared_point(sg, a.cells()[0], b.cells()[0]));
  const CellUnion ab({a.cells()[0], b.cells()[0]});
  CHECK(boundary_points(sg, ab).size() == boundary_points(sg, a).size() + boundary_points(sg, b).size());
}

TEST_CASE("neighbor count R") {
  CHECK(neighbor_count_R(build_preset(Preset::sierpinski, 1)) == 2);
  CHECK(neighbor_count_R(build_preset(Preset::sierpinski, 2)) == 2);
  CHECK(neighbor_count_R(build_preset(Preset::vicsek, 1)) == 1);
  CHECK(neighbor_count_R(build_preset(Preset::vicsek, 2)) == 1);
}

TEST_CASE("vertex graphs against enumeration") {
  const auto sg = build_preset(Preset::sierpinski, 0);
  const std::vector<Vec2> sg_anchor = sg.essential_vertices;
  for (int N = 0; N <= 4; ++N) {
    const Graph g = vertex_graph(sg, N);
    const auto e = enumerate_graph(sg_anchor, 0.5, sg.essential_vertices, N);
    CHECK(g.vertex_total() == e.vertices);
    CHECK(g.edge_count() == e.edges);
    // Closed form for the gasket: (3^{N+1} + 3) / 2 vertices, 3^{N+1} edges.
    CHECK(g.vertex_total() == static_cast<std::size_t>((std::pow(3, N + 1) + 3) / 2));
    CHECK(g.connected());
  }
  const Graph g1 = vertex_graph(sg, 1);
  CHECK(g1.vertex_total() == 6);
  CHECK(g1.edge_count() == 9);

  const auto vs = build_preset(Preset::vicsek, 0);
  const std::vector<Vec2> vs_anchor = {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {0.5, 0.5}};
  for (int N = 0; N <= 3; ++N) {
    const Graph g = vertex_graph(vs, N);
    const auto e = enumerate_graph(vs_anchor, 1.0 / 3.0, vs.essential_vertices, N);
    CHECK(g.vertex_total() == e.vertices);
    CHECK(g.edge_count() == e.edges);
    CHECK(g.connected());
  }
  CHECK(vertex_graph(vs, 0).edge_count() == 6);
  CHECK(vertex_graph(vs, 1).vertex_total() == 16);
  CHECK(vertex_graph(vs, 1).edge_count() == 30);
  CHECK_THROWS_AS(vertex_graph(sg, 9, 1000), CapExceeded);
}

TEST_CASE("word parsing") {
  const auto sg = build_preset(Preset::sierpinski, 1);
  const auto cells = parse_cells(sg, "12 13");
  REQUIRE(cells.size() == 2);
  CHECK(cells[0] == Cell({1, 2}, 1));
  CHECK(parse_cells(sg, "1-2,1-3") == cells);
  CHECK(format_word({1, 2, 3}) == "123");
  CHECK_THROWS(parse_cells(sg, "14"));
}

TEST_CASE("custom systems") {
  SUBCASE("presets pass the nesting checks when built as custom systems") {
    const auto sg = build_custom(sierpinski_config());
    CHECK(sg.M == 3);
    CHECK(sg.R == 2);
    CHECK(std::abs(sg.d_h - std::log(3.0) / std::log(2.0)) < 1e-12);
    const auto vs = build_custom(vicsek_config());
    CHECK(vs.M == 5);
    CHECK(vs.R == 1);
  }
  SUBCASE("a fourth overlapping map violates nesting") {
    auto c = sierpinski_config();
    c.maps.push_back({0.5, 0.0, {0.25, std::sqrt(3.0) / 12.0}});
    try {
      build_custom(c);
      FAIL("expected an axiom violation");
    } catch (const AxiomViolation& e) {
      CHECK(e.axiom() == "nesting");
    }
  }
  SUBCASE("missing walk dimension") {
    auto c = sierpinski_config();
    c.d_w = 0.0;
    CHECK_THROWS_AS(build_custom(c), AxiomViolation);
  }
  SUBCASE("wrong contraction") {
    auto c = sierpinski_config();
    c.maps[2].scale = 0.4;
    CHECK_THROWS_AS(build_custom(c), AxiomViolation);
  }
}

TEST_CASE("config parsing") {
  const std::string good = R"(# gasket
name = "gasket"
L = 2
d_w = 2.321928094887362
diam = 1
essential_vertices = [[0, 0], [1, 0], [0.5, 0.8660254037844386]]
maps = [
  {scale = 0.5, translation = [0, 0]},
  {scale = 0.5, rotation_degrees = 0, translation = [0.5, 0]},
  {scale = 0.5, translation = [0.25, 0.4330127018922193]},
]
)";
  const auto cfg = parse_system_config(good);
  CHECK(cfg.name == "gasket");
  CHECK(cfg.maps.size() == 3);
  CHECK(cfg.maps[1].translation == Vec2{0.5, 0});
  const auto sys = build_custom(cfg);
  CHECK(sys.R == 2);

  auto line_of = [](const std::string& text) {
    try {
      parse_system_config(text);
    } catch (const ConfigError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("L = 2\nd_w = 2\nbogus = 3\n") == 3);
  CHECK(line_of("L = 2\nd_w = x\n") == 2);
  CHECK(line_of("maps = [{translation = [0, 0]}]\nL = 2\nd_w = 2\nessential_vertices = [[0, 0], [1, 0]]\n") == 1);
  CHECK(line_of("L = 2\nd_w = 2\nessential_vertices = [[0, 0], [1, 0]]\nmaps = [\n  {scale = 0.5},\n  {scale = 0.5, shear = 1},\n]\n") == 6);
  CHECK(line_of("L = 2\nL = 3\n") == 2);
  CHECK(line_of("L = 2\n") > 0);
}
