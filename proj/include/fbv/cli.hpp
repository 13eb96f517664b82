#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace fbv::cli {

/// Parsed command line. Optional fields fall back to per-subcommand defaults.
struct RunConfig {
  std::string subcommand;
  std::string preset;
  std::string config_path;
  std::optional<int> level;
  int depth = 12;
  double width_target = 0.0;
  bool memoize = true;
  std::optional<int> phases;
  std::optional<int> periods;
  std::optional<double> grid_start;
  std::optional<double> grid_stop;
  std::optional<int> N;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool deterministic = false;
  bool direct = false;
  bool svg = false;
  std::string out_dir;
  std::string union_name = "single";
  std::string cells;
  std::string input;
  std::optional<double> period;
  double gamma = 0.0;
  int bins = 0;
  int n = 1;
  bool window_graph = false;
  std::uint64_t samples = 100000;
  int points = 8;
  std::string start;

  /// Throws UsageError on out-of-range values (depth <= 14, N <= 9, phases >= 4, positive grids).
  void validate() const;
  unsigned effective_threads() const;
};

/// Entry point of the fractal-bv tool. Returns 0 on success, 2 when an invariant check fails, 1 on usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fbv::cli
