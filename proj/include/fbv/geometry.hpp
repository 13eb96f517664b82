#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace fbv {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr bool operator==(const Vec2&) const = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  static constexpr Mat2 identity() { return {}; }
  static Mat2 rotation(double radians) {
    const double cs = std::cos(radians), sn = std::sin(radians);
    return {cs, -sn, sn, cs};
  }
  static constexpr Mat2 scaling(double s) { return {s, 0.0, 0.0, s}; }

  constexpr Vec2 operator*(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  constexpr Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  constexpr Mat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }
  constexpr Mat2 transposed() const { return {a, c, b, d}; }
  constexpr double determinant() const { return a * d - b * c; }
};

/// x -> linear * x + offset. Used for composed similitudes (linear = scale * orthogonal).
struct Affine {
  Mat2 linear;
  Vec2 offset;

  constexpr Vec2 apply(Vec2 p) const { return linear * p + offset; }
  /// (*this) o inner
  constexpr Affine compose(const Affine& inner) const {
    return {linear * inner.linear, linear * inner.offset + offset};
  }
};

/// Deduplicates points up to an absolute tolerance. Buckets are tolerance-sized,
/// lookups probe the 3x3 neighbourhood so near-boundary points still match.
class PointIndex {
 public:
  explicit PointIndex(double tolerance) : tol_(tolerance) {}

  /// Returns the id of a stored point within tolerance, or -1.
  int find(Vec2 p) const {
    const auto [bx, by] = bucket(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = buckets_.find(key(bx + dx, by + dy));
        if (it == buckets_.end()) continue;
        for (int id : it->second) {
          if (std::abs(points_[id].x - p.x) <= tol_ && std::abs(points_[id].y - p.y) <= tol_) return id;
        }
      }
    }
    return -1;
  }

  /// Inserts p unless an equivalent point exists; returns its id either way.
  int insert(Vec2 p) {
    if (int id = find(p); id >= 0) return id;
    const int id = static_cast<int>(points_.size());
    points_.push_back(p);
    const auto [bx, by] = bucket(p);
    buckets_[key(bx, by)].push_back(id);
    return id;
  }

  const std::vector<Vec2>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double tolerance() const { return tol_; }

 private:
  std::pair<std::int64_t, std::int64_t> bucket(Vec2 p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / tol_)), static_cast<std::int64_t>(std::floor(p.y / tol_))};
  }
  static std::uint64_t key(std::int64_t bx, std::int64_t by) {
    return (static_cast<std::uint64_t>(bx) * 0x9E3779B97F4A7C15ULL) ^ static_cast<std::uint64_t>(by);
  }

  double tol_;
  std::vector<Vec2> points_;
  std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
};

}  // namespace fbv
