#pragma once

#include "fbv/geometry.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fbv {

/// A word over the alphabet {1..M}; psi_w = psi_{w[0]} o psi_{w[1]} o ...
using Word = std::vector<int>;

inline constexpr std::size_t kDefaultCellCap = 10'000'000;

/// Planar similitude x -> contraction * rotation * x + translation.
struct Similitude {
  double contraction = 1.0;
  Mat2 rotation;
  Vec2 translation;

  Vec2 apply(Vec2 p) const { return (rotation * p) * contraction + translation; }
  Affine affine() const { return {rotation * contraction, translation}; }
  Vec2 fixed_point() const;
};

/// A nested fractal K given by its similitudes, together with a blow-up window
/// K^<m> = L^m K in which all cells live. Immutable once built.
struct FractalSystem {
  std::string name;
  std::vector<Similitude> maps;
  std::vector<Vec2> essential_vertices;
  double L = 0.0;
  int M = 0;
  double d_h = 0.0;
  double d_w = 0.0;
  double diam = 0.0;
  int R = 0;
  int window_level = 1;

  /// Bounding ball of K: every point of K lies within `radius` of `center`.
  Vec2 center;
  double radius = 0.0;
  /// Linear parts of the isometries fixing K about `center`; empty when unknown.
  std::vector<Mat2> symmetries;
  /// All maps are pure homotheties (identity rotation).
  bool translation_only = false;

  /// Resistance scaling factor backed out of d_w = log(M rho) / log L.
  double rho() const;
  std::size_t vertex_count() const { return essential_vertices.size(); }
  /// Absolute tolerance for identifying vertices of level-`level` cells.
  double vertex_tolerance(int level) const;
  Affine window_affine() const;
  /// Essential vertices of the window complex L^m K.
  std::vector<Vec2> window_vertices() const;
  FractalSystem with_window(int m) const;
};

enum class Preset { sierpinski, vicsek };

FractalSystem build_preset(Preset preset, int window_level = 1);
/// Accepts "sierpinski" / "sg" and "vicsek" / "vs".
FractalSystem build_preset(std::string_view name, int window_level = 1);

/// Raw description of a user-supplied system before validation.
struct SystemConfig {
  struct Map {
    double scale = 0.0;
    double rotation_degrees = 0.0;
    Vec2 translation;
  };
  std::string name = "custom";
  std::vector<Map> maps;
  std::vector<Vec2> essential_vertices;
  double L = 0.0;
  int M = 0;
  double d_w = 0.0;
  double diam = 0.0;
  int window_level = 1;
};

/// Validates the nested-fractal axioms checkable at level <= 3 and builds the system.
/// Throws AxiomViolation naming the failed axiom.
FractalSystem build_custom(const SystemConfig& config);

/// Parses the `key = value` config format. Throws ConfigError with the offending line.
SystemConfig parse_system_config(std::string_view text);
FractalSystem load_system_config(const std::filesystem::path& path);

/// An n-complex of the window, addressed by its full word (window-lift symbols first).
class Cell {
 public:
  Cell() = default;
  Cell(Word full_word, int window_level);

  const Word& word() const { return word_; }
  int window_level() const { return window_level_; }
  int level() const { return static_cast<int>(word_.size()) - window_level_; }

  Cell child(int symbol) const;
  /// Image under the level-1 map psi_symbol acting on window coordinates.
  Cell mapped(int symbol) const;
  /// True when `other` is this cell or one of its descendants.
  bool contains(const Cell& other) const;

  auto operator<=>(const Cell&) const = default;
  bool operator==(const Cell&) const = default;

 private:
  Word word_;
  int window_level_ = 0;
};

/// Exact rational measure num/den relative to mu(K) = 1.
struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

Rational cell_measure(const FractalSystem& sys, const Cell& cell);
Affine cell_affine(const FractalSystem& sys, const Cell& cell);
std::vector<Vec2> cell_vertices(const FractalSystem& sys, const Cell& cell);
Vec2 cell_center(const FractalSystem& sys, const Cell& cell);

/// Finite union of same-level, pairwise distinct cells.
class CellUnion {
 public:
  CellUnion() = default;
  explicit CellUnion(std::vector<Cell> cells);
  /// Refines cells of mixed levels to the deepest one; rejects nested inputs.
  static CellUnion refined_from(const FractalSystem& sys, std::vector<Cell> cells);

  const std::vector<Cell>& cells() const { return cells_; }
  bool empty() const { return cells_.empty(); }
  std::size_t size() const { return cells_.size(); }
  int level() const { return level_; }
  bool contains(const Cell& cell) const;
  /// Same set, expressed with cells of a deeper level.
  CellUnion refined(const FractalSystem& sys, int level) const;
  Rational measure(const FractalSystem& sys) const;

 private:
  std::vector<Cell> cells_;
  int level_ = 0;
};

Vec2 apply_word(const FractalSystem& sys, const Word& word, Vec2 p);

/// All level-n cells of the window, in lexicographic word order.
std::vector<Cell> cells_at_level(const FractalSystem& sys, int n, std::size_t cap = kDefaultCellCap);

/// Level-`level` cells whose bounding balls come within `reach` of some target cell's ball.
std::vector<Cell> cells_near(const FractalSystem& sys, int level, std::span<const Cell> targets, double reach,
                             std::size_t cap = kDefaultCellCap);

/// The unique common vertex of two distinct same-level cells, if they touch.
std::optional<Vec2> shared_point(const FractalSystem& sys, const Cell& a, const Cell& b);

/// A touching (inside, outside) pair of same-level cells across the boundary of a union.
struct BoundaryPair {
  Cell inside;
  Cell outside;
  Vec2 point;
};

std::vector<BoundaryPair> boundary_pairs(const FractalSystem& sys, const CellUnion& U);
/// Vertices shared between a cell of U and a same-level cell outside U (sorted by x then y).
std::vector<Vec2> boundary_points(const FractalSystem& sys, const CellUnion& U);

/// Number of same-level complexes touching the origin complex at its interior vertices.
int neighbor_count_R(const FractalSystem& sys);

/// The lexicographically first pair of touching 1-complexes of the window.
std::pair<Cell, Cell> reference_pair(const FractalSystem& sys);

/// Vertex graph V^<N> of the cells descending from `roots`; edges join vertices of a common N-cell.
struct Graph {
  int level = 0;
  std::vector<Vec2> vertices;
  std::vector<int> offsets;    // CSR row starts, size |V|+1
  std::vector<int> neighbors;  // sorted within each row
  std::vector<int> cell_count; // number of level-N cells containing each vertex
  std::size_t cell_total = 0;

  std::size_t vertex_total() const { return vertices.size(); }
  std::size_t edge_count() const { return neighbors.size() / 2; }
  int degree(int v) const { return offsets[v + 1] - offsets[v]; }
  std::span<const int> adjacent(int v) const {
    return {neighbors.data() + offsets[v], neighbors.data() + offsets[v + 1]};
  }
  bool connected() const;
};

Graph vertex_graph(const FractalSystem& sys, int N, std::size_t cap = kDefaultCellCap);
Graph vertex_graph(const FractalSystem& sys, std::span<const Cell> roots, int N, std::size_t cap = kDefaultCellCap);

/// Parses "12 13" or "1-2,1-3" style word lists (window-lift symbols included).
std::vector<Cell> parse_cells(const FractalSystem& sys, std::string_view text);
std::string format_word(const Word& word);

}  // namespace fbv
