#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "antiplan/blockworld.hpp"
#include "antiplan/common.hpp"
#include "antiplan/geometry.hpp"

namespace antiplan::motion {

/// Free space for a disc robot: the workspace shrunk by the radius, minus
/// obstacles already inflated by the radius.
struct Workspace {
  double width = 10.0;
  double height = 10.0;
  double robot_radius = 0.0;
  std::vector<Rect> obstacles;

  bool point_free(Vec2 p) const {
    if (p.x < robot_radius || p.y < robot_radius || p.x > width - robot_radius || p.y > height - robot_radius) return false;
    return std::none_of(obstacles.begin(), obstacles.end(), [&](const Rect& r) { return r.contains_strict(p); });
  }

  // Free space bounds are convex, so checking the endpoints covers them.
  bool segment_free(Vec2 a, Vec2 b) const {
    if (!point_free(a) || !point_free(b)) return false;
    return std::none_of(obstacles.begin(), obstacles.end(), [&](const Rect& r) { return segment_hits_rect(a, b, r); });
  }
};

inline Workspace workspace_of(const Environment& env, bool with_obstacles = true) {
  Workspace ws{env.width, env.height, env.robot_radius, {}};
  if (with_obstacles)
    for (const auto& r : env.regions) ws.obstacles.push_back(r.footprint.inflated(env.robot_radius));
  return ws;
}

/// Navigation locations in region order.
inline std::vector<Vec2> locations_of(const Environment& env) {
  std::vector<Vec2> out;
  for (const auto& r : env.regions) out.push_back(r.approach_point);
  return out;
}

using SegmentCheck = std::function<bool(Vec2, Vec2)>;

enum class EdgeStatus : std::uint8_t { unchecked, valid, invalid };

struct Edge {
  int u = 0;
  int v = 0;
  double length = 0.0;
};

/// k-nearest-neighbor roadmap. The first vertices are the navigation
/// locations, in the order given; sampled vertices follow. Edge validity is
/// resolved lazily and remembered across queries.
struct Roadmap {
  std::vector<Vec2> vertices;
  std::vector<Edge> edges;
  std::vector<std::vector<int>> incident;
  std::vector<EdgeStatus> status;
  int num_locations = 0;
  std::size_t collision_checks = 0;

  int other(int e, int v) const {
    const Edge& ed = edges[static_cast<std::size_t>(e)];
    return ed.u == v ? ed.v : ed.u;
  }
};

inline Roadmap build_roadmap(const Workspace& ws, std::span<const Vec2> locations, int n_samples, int k, Rng& rng) {
  if (n_samples < 2) throw DimensionMismatch("roadmap needs at least 2 samples");
  Roadmap rm;
  rm.vertices.assign(locations.begin(), locations.end());
  rm.num_locations = static_cast<int>(locations.size());
  const double r = ws.robot_radius;
  int added = 0;
  // bounded rejection sampling; free space is assumed to be a sizeable
  // fraction of the workspace
  for (std::size_t attempts = 0; added < n_samples && attempts < static_cast<std::size_t>(n_samples) * 1000; ++attempts) {
    const Vec2 p{rng.uniform(r, ws.width - r), rng.uniform(r, ws.height - r)};
    if (!ws.point_free(p)) continue;
    rm.vertices.push_back(p);
    ++added;
  }

  const auto n = rm.vertices.size();
  rm.incident.resize(n);
  std::vector<std::pair<double, int>> dist;
  std::vector<std::vector<int>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dist.emplace_back(distance(rm.vertices[i], rm.vertices[j]), static_cast<int>(j));
    const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    for (std::size_t m = 0; m < kk; ++m) neighbors[i].push_back(dist[m].second);
  }
  // symmetric union of the k-NN relation
  for (std::size_t i = 0; i < n; ++i) {
    for (int j : neighbors[i]) {
      const int a = std::min(static_cast<int>(i), j);
      const int b = std::max(static_cast<int>(i), j);
      const bool dup = std::any_of(rm.incident[static_cast<std::size_t>(a)].begin(), rm.incident[static_cast<std::size_t>(a)].end(),
                                   [&](int e) { return rm.other(e, a) == b; });
      if (dup) continue;
      const int e = static_cast<int>(rm.edges.size());
      rm.edges.push_back({a, b, distance(rm.vertices[static_cast<std::size_t>(a)], rm.vertices[static_cast<std::size_t>(b)])});
      rm.incident[static_cast<std::size_t>(a)].push_back(e);
      rm.incident[static_cast<std::size_t>(b)].push_back(e);
    }
  }
  rm.status.assign(rm.edges.size(), EdgeStatus::unchecked);
  return rm;
}

inline Roadmap build_roadmap(const Environment& env, int n_samples, int k, Rng& rng, bool with_obstacles = true) {
  const auto locs = locations_of(env);
  return build_roadmap(workspace_of(env, with_obstacles), locs, n_samples, k, rng);
}

struct PathResult {
  std::vector<int> path;  // vertex ids from a to b
  double length = 0.0;
  std::size_t checked = 0;          // collision checks issued by this query
  std::size_t candidate_edges = 0;  // edges on all candidate paths examined
};

namespace detail {

// Dijkstra over edges not known to be invalid; ties resolve to the smaller
// vertex id.
inline std::optional<std::vector<int>> shortest_path(const Roadmap& rm, int a, int b) {
  const auto n = rm.vertices.size();
  std::vector<double> d(n, std::numeric_limits<double>::infinity());
  std::vector<int> via(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  d[static_cast<std::size_t>(a)] = 0.0;
  pq.push({0.0, a});
  while (!pq.empty()) {
    const auto [dv, v] = pq.top();
    pq.pop();
    if (dv > d[static_cast<std::size_t>(v)]) continue;
    if (v == b) break;
    for (int e : rm.incident[static_cast<std::size_t>(v)]) {
      if (rm.status[static_cast<std::size_t>(e)] == EdgeStatus::invalid) continue;
      const int w = rm.other(e, v);
      const double nd = dv + rm.edges[static_cast<std::size_t>(e)].length;
      if (nd < d[static_cast<std::size_t>(w)]) {
        d[static_cast<std::size_t>(w)] = nd;
        via[static_cast<std::size_t>(w)] = e;
        pq.push({nd, w});
      }
    }
  }
  if (d[static_cast<std::size_t>(b)] == std::numeric_limits<double>::infinity()) return std::nullopt;
  std::vector<int> edges;
  for (int v = b; v != a; v = rm.other(via[static_cast<std::size_t>(v)], v)) edges.push_back(via[static_cast<std::size_t>(v)]);
  std::reverse(edges.begin(), edges.end());
  return edges;
}

inline PathResult to_result(const Roadmap& rm, int a, const std::vector<int>& edges) {
  PathResult r;
  r.path.push_back(a);
  for (int e : edges) {
    r.path.push_back(rm.other(e, r.path.back()));
    r.length += rm.edges[static_cast<std::size_t>(e)].length;
  }
  return r;
}

inline bool check_edge(Roadmap& rm, int e, const SegmentCheck& free) {
  auto& st = rm.status[static_cast<std::size_t>(e)];
  if (st == EdgeStatus::unchecked) {
    const Edge& ed = rm.edges[static_cast<std::size_t>(e)];
    ++rm.collision_checks;
    st = free(rm.vertices[static_cast<std::size_t>(ed.u)], rm.vertices[static_cast<std::size_t>(ed.v)]) ? EdgeStatus::valid
                                                                                                         : EdgeStatus::invalid;
  }
  return st == EdgeStatus::valid;
}

}  // namespace detail

/// Lazy PRM query: plan on optimistic edges, collision-check only the edges
/// of the candidate path, drop invalid ones and replan.
inline PathResult lazy_query(Roadmap& rm, int a, int b, const SegmentCheck& free) {
  const std::size_t before = rm.collision_checks;
  std::size_t examined = 0;
  for (;;) {
    const auto edges = detail::shortest_path(rm, a, b);
    if (!edges) throw NoPath("no collision-free path between roadmap vertices " + std::to_string(a) + " and " + std::to_string(b));
    examined += edges->size();
    bool ok = true;
    for (int e : *edges) {
      if (!detail::check_edge(rm, e, free)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      auto r = detail::to_result(rm, a, *edges);
      r.checked = rm.collision_checks - before;
      r.candidate_edges = examined;
      return r;
    }
  }
}

/// Classic PRM query: every edge is validated up front.
inline PathResult eager_query(Roadmap& rm, int a, int b, const SegmentCheck& free) {
  const std::size_t before = rm.collision_checks;
  for (std::size_t e = 0; e < rm.edges.size(); ++e) detail::check_edge(rm, static_cast<int>(e), free);
  const auto edges = detail::shortest_path(rm, a, b);
  if (!edges) throw NoPath("no collision-free path between roadmap vertices " + std::to_string(a) + " and " + std::to_string(b));
  auto r = detail::to_result(rm, a, *edges);
  r.checked = rm.collision_checks - before;
  r.candidate_edges = edges->size();
  return r;
}

inline SegmentCheck segment_checker(const Workspace& ws) {
  return [ws](Vec2 a, Vec2 b) { return ws.segment_free(a, b); };
}

}  // namespace antiplan::motion
