#include "fbv/measure.hpp"

#include "fbv/errors.hpp"
#include "fbv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <unordered_map>

namespace fbv {

namespace {

constexpr int kPointLevel = std::numeric_limits<int>::max();

struct Node {
  Affine affine;
  Vec2 center;
  int level = 0;
};

struct Key {
  int la, lb;
  std::int64_t dx, dy;
  bool operator==(const Key&) const = default;
};

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.la) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.lb) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.dx) * 0xBF58476D1CE4E5B9ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.dy) * 0x94D049BB133111EBULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Masses are counted exactly in units of M^-kUnitLevel (times M^{2 window}), so sums carry no
// rounding and congruent configurations give bit-identical totals.
using Count = unsigned __int128;
constexpr int kUnitLevel = 2 * (kMaxDepth + 1);

struct Bounds {
  Count lo = 0;
  Count hi = 0;
};

class Engine {
 public:
  Engine(const FractalSystem& sys, double r, int cap, bool memo)
      : sys_(sys), r_(r), cap_(cap), memo_(memo && sys.translation_only), offset_(sys.window_level) {
    for (const auto& m : sys.maps) maps_.push_back(m.affine());
    // Tables are indexed by level + window_level, since window cells sit at negative levels.
    for (int l = -offset_; l <= kMaxDepth + 1; ++l) {
      radius_.push_back(sys.radius * std::pow(sys.L, -l) * (1.0 + 1e-12));
      diam_.push_back(sys.diam * std::pow(sys.L, -l));
      scale_.push_back(std::pow(sys.L, static_cast<double>(std::max(l, 0))));
    }
    // Headroom of one bit for summing over many cell pairs.
    const Count limit = ~Count{0} >> 2;
    power_.push_back(1);
    for (int k = 1; k <= kUnitLevel + 2 * offset_; ++k) {
      if (power_.back() > limit / static_cast<Count>(sys.M))
        throw PreconditionError("too many maps for exact mass accounting at this window level");
      power_.push_back(power_.back() * static_cast<Count>(sys.M));
    }
  }

  Node root(const Cell& c) const {
    if (c.level() > kMaxDepth + 1 || c.level() < -offset_)
      throw PreconditionError("cell level is outside the range the engine supports");
    const Affine a = cell_affine(sys_, c);
    return {a, a.apply(sys_.center), c.level()};
  }

  double to_mass_down(Count c) const { return convert(c, false); }
  double to_mass_up(Count c) const { return convert(c, true); }

  Bounds run(const Node& a, const Node& b) {
    ++visited_;
    const double d = distance(a.center, b.center);
    const double ra = radius(a), rb = radius(b);
    const Count w = weight(a, b);
    if (d + ra + rb <= r_) return {w, w};
    if (d - ra - rb > r_) return {};
    // A cell against itself: the exact diameter decides.
    if (a.level == b.level && a.level != kPointLevel && a.center == b.center && diam_[index(a.level)] <= r_)
      return {w, w};

    bool split_a;
    if (a.level != b.level) {
      split_a = a.level < b.level;
    } else {
      // Equal levels: split the cell with the smaller centre so that (A, B) and (B, A)
      // produce mirrored recursion trees.
      split_a = a.center.x < b.center.x || (a.center.x == b.center.x && a.center.y <= b.center.y);
    }
    const Node& s = split_a ? a : b;
    if (s.level >= cap_) {
      depth_ = std::max(depth_, s.level);
      return {0, w};
    }

    Key key{};
    if (memo_ && b.level != kPointLevel && a.level != kPointLevel) {
      key = canonical_key(a, b);
      if (auto it = memo_table_.find(key); it != memo_table_.end()) return it->second;
    }

    Bounds sum;
    for (const auto& m : maps_) {
      const Affine ca = s.affine.compose(m);
      const Node child{ca, ca.apply(sys_.center), s.level + 1};
      depth_ = std::max(depth_, child.level);
      const Bounds part = split_a ? run(child, b) : run(a, child);
      sum.lo += part.lo;
      sum.hi += part.hi;
    }
    if (memo_ && b.level != kPointLevel && a.level != kPointLevel) memo_table_.emplace(key, sum);
    return sum;
  }

  std::uint64_t visited() const { return visited_; }
  int depth() const { return depth_; }

 private:
  std::size_t index(int level) const { return static_cast<std::size_t>(level + offset_); }
  double radius(const Node& n) const {
    if (n.level == kPointLevel) return 0.0;
    return radius_[index(n.level)] + 1e-14 * (1.0 + norm(n.center));
  }
  // mu(a) mu(b) = M^{-la-lb}; a point carries weight 1.
  Count weight(const Node& a, const Node& b) const {
    const int la = a.level == kPointLevel ? 0 : a.level, lb = b.level == kPointLevel ? 0 : b.level;
    return power_[static_cast<std::size_t>(kUnitLevel - la - lb)];
  }
  double convert(Count c, bool up) const {
    const Count unit = power_[kUnitLevel];
    if (c % unit == 0 && c / unit < (Count{1} << 53)) return static_cast<double>(c / unit);
    // Long double keeps the quotient well inside one ulp of the double result; step outwards once.
    const double q = static_cast<double>(static_cast<long double>(c) / static_cast<long double>(unit));
    return up ? std::nextafter(q, std::numeric_limits<double>::infinity()) : std::max(0.0, std::nextafter(q, 0.0));
  }


  Key canonical_key(const Node& a, const Node& b) const {
    const Vec2 d = (b.center - a.center) * scale_[index(std::max(a.level, b.level))];
    auto quantize = [](double v) { return static_cast<std::int64_t>(std::llround(v * 1e6)); };
    Key best{a.level, b.level, quantize(d.x), quantize(d.y)};
    for (const auto& g : sys_.symmetries) {
      const Vec2 e = g * d;
      const Key k{a.level, b.level, quantize(e.x), quantize(e.y)};
      if (std::tie(k.dx, k.dy) < std::tie(best.dx, best.dy)) best = k;
    }
    return best;
  }

  const FractalSystem& sys_;
  double r_;
  int cap_;
  bool memo_;
  std::vector<Affine> maps_;
  int offset_ = 0;
  std::vector<double> radius_, diam_, scale_;
  std::vector<Count> power_;
  std::unordered_map<Key, Bounds, KeyHash> memo_table_;
  std::uint64_t visited_ = 0;
  int depth_ = 0;
};

void check_options(double r, const EngineOptions& opts) {
  if (!(r > 0.0)) throw PreconditionError("radius must be positive");
  if (opts.depth_cap < 0 || opts.depth_cap > kMaxDepth)
    throw PreconditionError("depth cap must lie in [0, " + std::to_string(kMaxDepth) + "]");
}

template <class Body>
MassInterval deepen(const EngineOptions& opts, int start, Body&& body) {
  if (opts.width_target <= 0.0) return body(opts.depth_cap);
  MassInterval out;
  std::uint64_t visited = 0;
  for (int cap = std::min(std::max(start, 0), opts.depth_cap);; ++cap) {
    out = body(cap);
    visited += out.pairs_visited;
    if (out.width() <= opts.width_target || cap >= opts.depth_cap) break;
  }
  out.pairs_visited = visited;
  return out;
}

MassInterval pairs_over(const FractalSystem& sys, std::span<const Cell> A, std::span<const Cell> B, double r,
                        const EngineOptions& opts) {
  check_options(r, opts);
  int start = 0;
  for (const auto& c : A) start = std::max(start, c.level() + 2);
  for (const auto& c : B) start = std::max(start, c.level() + 2);
  return deepen(opts, start, [&](int cap) {
    Engine engine(sys, r, cap, opts.memoize);
    Bounds total;
    for (const auto& a : A) {
      for (const auto& b : B) {
        const Bounds part = engine.run(engine.root(a), engine.root(b));
        total.lo += part.lo;
        total.hi += part.hi;
      }
    }
    MassInterval out;
    out.lo = engine.to_mass_down(total.lo);
    out.hi = engine.to_mass_up(total.hi);
    out.depth_reached = engine.depth();
    out.pairs_visited = engine.visited();
    return out;
  });
}

MassInterval ball_over(const FractalSystem& sys, Vec2 p, double r, std::span<const Cell> A, const EngineOptions& opts) {
  check_options(r, opts);
  int start = 0;
  for (const auto& c : A) start = std::max(start, c.level() + 2);
  return deepen(opts, start, [&](int cap) {
    Engine engine(sys, r, cap, false);
    const Node point{{}, p, kPointLevel};
    Bounds total;
    for (const auto& a : A) {
      const Bounds part = engine.run(engine.root(a), point);
      total.lo += part.lo;
      total.hi += part.hi;
    }
    MassInterval out;
    out.lo = engine.to_mass_down(total.lo);
    out.hi = engine.to_mass_up(total.hi);
    out.depth_reached = engine.depth();
    out.pairs_visited = engine.visited();
    return out;
  });
}

}  // namespace

BoundingBall cell_bounding_ball(const FractalSystem& sys, const Cell& cell) {
  return {cell_center(sys, cell), sys.radius * std::pow(sys.L, -cell.level())};
}

MassInterval pair_mass(const FractalSystem& sys, const Cell& A, const Cell& B, double r, const EngineOptions& opts) {
  return pairs_over(sys, std::span(&A, 1), std::span(&B, 1), r, opts);
}

MassInterval pair_mass(const FractalSystem& sys, const CellUnion& A, const CellUnion& B, double r,
                       const EngineOptions& opts) {
  return pairs_over(sys, A.cells(), B.cells(), r, opts);
}

MassInterval ball_mass(const FractalSystem& sys, Vec2 p, double r, const Cell& A, const EngineOptions& opts) {
  return ball_over(sys, p, r, std::span(&A, 1), opts);
}

MassInterval ball_mass(const FractalSystem& sys, Vec2 p, double r, const CellUnion& A, const EngineOptions& opts) {
  return ball_over(sys, p, r, A.cells(), opts);
}

DistanceBounds cell_distance(const FractalSystem& sys, const Cell& A, const Cell& B, int depth) {
  std::vector<Affine> maps;
  for (const auto& m : sys.maps) maps.push_back(m.affine());
  const int stop_a = A.level() + depth, stop_b = B.level() + depth;
  auto ball_radius = [&](int level) { return sys.radius * std::pow(sys.L, -level) * (1.0 + 1e-12); };

  // lower: smallest gap among fully refined pairs; pruned: smallest gap among pairs cut off because
  // they cannot beat a distance already realised by two vertices.
  double upper = std::numeric_limits<double>::infinity();
  double lower = std::numeric_limits<double>::infinity();
  double pruned = std::numeric_limits<double>::infinity();
  auto vertex_gap = [&](const Affine& a, const Affine& b) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& u : sys.essential_vertices)
      for (const auto& v : sys.essential_vertices) best = std::min(best, distance(a.apply(u), b.apply(v)));
    return best;
  };

  std::function<void(const Affine&, int, const Affine&, int, double)> visit = [&](const Affine& a, int la,
                                                                                 const Affine& b, int lb,
                                                                                 double inherited) {
    const double gap = std::max(
        {0.0, inherited,
         distance(a.apply(sys.center), b.apply(sys.center)) - ball_radius(la) - ball_radius(lb)});
    if (gap >= lower) return;
    upper = std::min(upper, vertex_gap(a, b));
    if (gap >= upper) {
      pruned = std::min(pruned, gap);
      return;
    }
    const bool a_done = la >= stop_a, b_done = lb >= stop_b;
    if (a_done && b_done) {
      lower = std::min(lower, gap);
      return;
    }
    const bool split_a = !a_done && (b_done || la <= lb);
    for (const auto& m : maps) {
      if (split_a) {
        visit(a.compose(m), la + 1, b, lb, gap);
      } else {
        visit(a, la, b.compose(m), lb + 1, gap);
      }
    }
  };
  visit(cell_affine(sys, A), A.level(), cell_affine(sys, B), B.level(), 0.0);
  return {std::min({lower, pruned, upper}), upper};
}

std::pair<double, double> wilson_interval(std::uint64_t hits, std::uint64_t samples, double z) {
  if (samples == 0) return {0.0, 1.0};
  const double n = static_cast<double>(samples);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // The extreme counts have exact endpoints; rounding would otherwise leave them a few ulps inside.
  return {hits == 0 ? 0.0 : std::max(0.0, centre - half), hits == samples ? 1.0 : std::min(1.0, centre + half)};
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(root ^ mix(stream + 0x632BE59BD9B4E019ULL));
}

namespace {

// Samples mu on a cell as the image of the centre under a random word of length >= 20,
// assembled from precomputed tables of short words.
class WordSampler {
 public:
  explicit WordSampler(const FractalSystem& sys) : center_(sys.center) {
    int k = 1;
    while (std::pow(static_cast<double>(sys.M), k + 1) <= 4096.0) ++k;
    Word w;
    std::vector<Affine> level{Affine{}};
    for (int d = 0; d < k; ++d) {
      std::vector<Affine> next;
      for (const auto& a : level)
        for (const auto& m : sys.maps) next.push_back(a.compose(m.affine()));
      level = std::move(next);
    }
    table_ = std::move(level);
    const double t = static_cast<double>(table_.size());
    chunks_ = (20 + k - 1) / k;
    while (chunks_ > 1 && std::pow(t, chunks_) > 9.0e18) --chunks_;
    span_ = 1;
    for (int c = 0; c < chunks_; ++c) span_ *= table_.size();
  }

  Vec2 sample(const Affine& cell, std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::uint64_t> pick(0, span_ - 1);
    std::uint64_t u = pick(rng);
    Vec2 p = center_;
    for (int c = 0; c < chunks_; ++c) {
      p = table_[u % table_.size()].apply(p);
      u /= table_.size();
    }
    return cell.apply(p);
  }

 private:
  Vec2 center_;
  std::vector<Affine> table_;
  int chunks_ = 1;
  std::uint64_t span_ = 1;
};

constexpr std::uint64_t kChunk = 1 << 16;

template <class Trial>
MonteCarloEstimate run_mc(std::uint64_t samples, std::uint64_t seed, double z, unsigned threads, double scale,
                          Trial&& trial) {
  const std::uint64_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<std::uint64_t> hits(chunks, 0);
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::mt19937_64 rng(derive_seed(seed, c));
    const std::uint64_t n = std::min<std::uint64_t>(kChunk, samples - c * kChunk);
    std::uint64_t h = 0;
    for (std::uint64_t i = 0; i < n; ++i) h += trial(rng) ? 1 : 0;
    hits[c] = h;
  });
  MonteCarloEstimate out;
  out.samples = samples;
  for (auto h : hits) out.hits += h;
  const auto [lo, hi] = wilson_interval(out.hits, samples, z);
  out.estimate = scale * static_cast<double>(out.hits) / static_cast<double>(std::max<std::uint64_t>(samples, 1));
  out.ci_lo = scale * lo;
  out.ci_hi = scale * hi;
  return out;
}

}  // namespace

MonteCarloEstimate mc_pair_mass(const FractalSystem& sys, const Cell& A, const Cell& B, double r,
                                std::uint64_t samples, std::uint64_t seed, double z, unsigned threads) {
  const WordSampler sampler(sys);
  const Affine fa = cell_affine(sys, A), fb = cell_affine(sys, B);
  const double scale = cell_measure(sys, A).value() * cell_measure(sys, B).value();
  return run_mc(samples, seed, z, threads, scale, [&](std::mt19937_64& rng) {
    const Vec2 x = sampler.sample(fa, rng);
    const Vec2 y = sampler.sample(fb, rng);
    return distance(x, y) <= r;
  });
}

MonteCarloEstimate mc_ball_mass(const FractalSystem& sys, Vec2 p, double r, const Cell& A, std::uint64_t samples,
                                std::uint64_t seed, double z, unsigned threads) {
  const WordSampler sampler(sys);
  const Affine fa = cell_affine(sys, A);
  return run_mc(samples, seed, z, threads, cell_measure(sys, A).value(),
                [&](std::mt19937_64& rng) { return distance(sampler.sample(fa, rng), p) <= r; });
}

}  // namespace fbv
