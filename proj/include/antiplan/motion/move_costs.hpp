#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "antiplan/blockworld.hpp"
#include "antiplan/motion/roadmap.hpp"

namespace antiplan::motion {

struct MotionParams {
  int n_samples = 500;
  int k = 10;
  int retries = 3;
  bool obstacles = true;  // treat region footprints as obstacles
  bool shortcut = true;   // pull each returned path taut
};

/// Length of the shortest chain of collision-free chords through points
/// resampled along the path every `step` meters. Pulls a jagged roadmap path
/// taut within its homotopy class; never longer than the input.
inline double shortcut_length(const Roadmap& rm, const std::vector<int>& path, const SegmentCheck& free, double step = 0.1) {
  if (path.size() < 2) return 0.0;
  std::vector<Vec2> pts{rm.vertices[static_cast<std::size_t>(path.front())]};
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec2 a = rm.vertices[static_cast<std::size_t>(path[i - 1])];
    const Vec2 b = rm.vertices[static_cast<std::size_t>(path[i])];
    const int pieces = std::max(1, static_cast<int>(std::ceil(distance(a, b) / step)));
    for (int k = 1; k <= pieces; ++k) pts.push_back(a + (static_cast<double>(k) / pieces) * (b - a));
  }
  std::vector<double> best(pts.size(), kInfiniteCost);
  best[0] = 0.0;
  for (std::size_t j = 1; j < pts.size(); ++j) {
    best[j] = best[j - 1] + distance(pts[j - 1], pts[j]);
    for (std::size_t i = 0; i + 1 < j; ++i) {
      const double c = best[i] + distance(pts[i], pts[j]);
      if (c < best[j] && free(pts[i], pts[j])) best[j] = c;
    }
  }
  return best.back();
}

/// Move costs between all region approach points: scale times the Lazy PRM
/// path length. The roadmap is seeded from the environment seed; when some
/// pair is disconnected it is rebuilt with twice the samples.
inline MoveCostTable compute_move_costs(const Environment& env, double scale, const MotionParams& params = {}) {
  const auto ws = workspace_of(env, params.obstacles);
  const auto locs = locations_of(env);
  const auto free = segment_checker(ws);
  for (const auto& p : locs)
    if (!ws.point_free(p)) throw UnreachableLocation("approach point is not in free space");

  const int n = env.num_regions();
  int samples = params.n_samples;
  for (int attempt = 0; attempt <= params.retries; ++attempt, samples *= 2) {
    Rng rng(derive_seed(env.seed, 0x50524dULL, static_cast<std::uint64_t>(attempt)));
    Roadmap rm = build_roadmap(ws, locs, samples, params.k, rng);
    MoveCostTable table(n);
    try {
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
          const auto r = lazy_query(rm, a, b, free);
          const double len = params.shortcut ? shortcut_length(rm, r.path, free) : r.length;
          // round up so no cost falls below the geometric length
          table.set(a, b, std::ceil(scale * len / kCostQuantum) * kCostQuantum);
        }
    } catch (const NoPath&) {
      continue;
    }
    // Rounding to the cost quantum can break the triangle inequality by a
    // fraction of a quantum; close the table under shortest paths.
    for (int m = 0; m < n; ++m)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          if (table(a, m) + table(m, b) < table(a, b)) table.set(a, b, table(a, m) + table(m, b));
    return table;
  }
  throw UnreachableLocation("roadmap does not connect all locations after " + std::to_string(params.retries) + " retries");
}

}  // namespace antiplan::motion
