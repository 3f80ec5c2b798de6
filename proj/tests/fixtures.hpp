#pragma once
// Hand-built environments and brute-force reference computations shared by
// the unit tests and the acceptance runner. Nothing here calls the PDDL
// pipeline or the A* planner.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "antiplan/blockworld.hpp"
#include "antiplan/motion/roadmap.hpp"

namespace fixtures {

using namespace antiplan;

struct RegionSpec {
  std::string id;
  Color color;
  int slots;
  Vec2 approach;  // footprint sits just above this point
};

struct ObjectSpec {
  std::string id;
  Color color;
};

/// Regions with slot ids "<region>_s<k>", move costs = cost_per_meter times
/// the straight-line distance between approach points, quantized.
inline Environment make_env(const std::vector<RegionSpec>& regions, const std::vector<ObjectSpec>& objects,
                            const std::vector<std::string>& placement_slots, const std::string& robot_region,
                            const std::vector<std::string>& tasks = {}) {
  Environment env;
  env.seed = 0;
  for (const auto& r : regions) {
    Region reg;
    reg.id = r.id;
    reg.color = r.color;
    reg.approach_point = r.approach;
    reg.footprint = {r.approach.x - 0.3 * r.slots, r.approach.y + 0.3, r.approach.x + 0.3 * r.slots, r.approach.y + 0.9};
    for (int k = 0; k < r.slots; ++k) {
      Slot s;
      s.id = r.id + "_s" + std::to_string(k + 1);
      s.region = static_cast<int>(env.regions.size());
      s.position = {reg.footprint.x0 + 0.3 + 0.6 * k, r.approach.y + 0.6};
      reg.slots.push_back(static_cast<int>(env.slots.size()));
      env.slots.push_back(s);
    }
    env.regions.push_back(reg);
  }
  for (const auto& o : objects) env.objects.push_back({o.id, o.color, "block"});
  env.move_costs = MoveCostTable(env.num_regions());
  for (int a = 0; a < env.num_regions(); ++a)
    for (int b = 0; b < env.num_regions(); ++b)
      if (a != b)
        env.move_costs.set(a, b, quantize_cost(env.cost_per_meter * distance(env.regions[a].approach_point, env.regions[b].approach_point)));
  env.initial_state.placements.assign(env.objects.size(), kNone);
  for (std::size_t o = 0; o < placement_slots.size(); ++o) env.initial_state.placements[o] = env.slot_index(placement_slots[o]);
  env.initial_state.robot_at = env.region_index(robot_region);
  std::vector<TaskSpec> ts;
  for (const auto& t : tasks) ts.push_back(parse_task(env, t));
  if (!ts.empty()) env.task_distribution = TaskDistribution::uniform(std::move(ts));
  return env;
}

/// White block F parked on the only blue slot. Clearing blue is cheapest by
/// dropping F onto the free red slot, but the likely next task wants both
/// red slots; parking F on the white region costs a little more now and
/// saves a pick-and-place later.
inline Environment parking_fixture() {
  return make_env(
      {
          {"green", Color::green, 2, {0.0, 1.0}},
          {"blue", Color::blue, 1, {2.0, 1.0}},
          {"red", Color::red, 2, {5.0, 1.0}},
          {"white", Color::white, 1, {3.5, 3.0}},
      },
      {{"A", Color::red}, {"F", Color::white}, {"B", Color::blue}, {"C", Color::green}},
      {"red_s1", "blue_s1", "green_s1", "green_s2"}, "blue", {"B:red,C:red"});
}

/// Random small world: 2-4 regions, at most max_slots slots, 1..max_objects
/// objects, random approach points in a 10 x 10 square.
inline Environment random_small_env(Rng& rng, int max_objects = 6, int max_slots = 10) {
  const int n_regions = rng.between(2, 4);
  std::vector<RegionSpec> regions;
  int slots_left = max_slots;
  for (int r = 0; r < n_regions; ++r) {
    const int cap = std::min(3, slots_left - (n_regions - r - 1));
    const int k = rng.between(1, std::max(1, cap));
    slots_left -= k;
    regions.push_back({"r" + std::to_string(r), kPalette[rng.below(kPalette.size())], k, {rng.uniform(0.5, 9.5), rng.uniform(0.5, 9.5)}});
  }
  const int total = max_slots - slots_left;
  const int n_objects = rng.between(1, std::max(1, std::min(max_objects, total - 1)));
  std::vector<ObjectSpec> objects;
  for (int o = 0; o < n_objects; ++o) objects.push_back({std::string(1, static_cast<char>('A' + o)), kPalette[rng.below(kPalette.size())]});
  auto env = make_env(regions, objects, {}, "r0");
  env.initial_state = random_state(env, rng);
  return env;
}

inline TaskSpec random_task(const Environment& env, Rng& rng) {
  TaskSpec t;
  const int o1 = static_cast<int>(rng.below(env.objects.size()));
  t.directives.push_back({o1, static_cast<int>(rng.below(env.regions.size()))});
  if (env.num_objects() >= 2 && rng.below(2) == 0) {
    int o2 = o1;
    while (o2 == o1) o2 = static_cast<int>(rng.below(env.objects.size()));
    t.directives.push_back({o2, static_cast<int>(rng.below(env.regions.size()))});
    std::sort(t.directives.begin(), t.directives.end());
  }
  return t;
}

/// Free slots among those of a region.
inline int free_slot_count(const Environment& env, const WorldState& s, int region) {
  int n = 0;
  for (int slot : env.regions[region].slots)
    if (std::find(s.placements.begin(), s.placements.end(), slot) == s.placements.end()) ++n;
  return n;
}

/// Dijkstra over concrete world states with a hand-written successor
/// function. Returns nullopt when the task is unreachable.
inline std::optional<Cost> ucs_cost(const Environment& env, const WorldState& s0, const TaskSpec& task) {
  auto done = [&](const WorldState& s) {
    if (s.holding != kNone) return false;
    for (const auto& d : task.directives) {
      const int slot = s.placements[d.object];
      if (slot == kNone || env.slots[slot].region != d.region) return false;
    }
    return true;
  };
  using Item = std::pair<Cost, std::string>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  std::unordered_map<std::string, Cost> best;
  std::unordered_map<std::string, WorldState> states;
  auto key = [](const WorldState& s) {
    std::string k{static_cast<char>(s.robot_at), static_cast<char>(s.holding)};
    for (int p : s.placements) k.push_back(static_cast<char>(p));
    return k;
  };
  auto push = [&](const WorldState& s, Cost c) {
    const auto k = key(s);
    const auto it = best.find(k);
    if (it != best.end() && it->second <= c) return;
    best[k] = c;
    states[k] = s;
    open.push({c, k});
  };
  push(s0, 0.0);
  while (!open.empty()) {
    const auto [c, k] = open.top();
    open.pop();
    if (best[k] < c) continue;
    const WorldState s = states[k];
    if (done(s)) return c;
    for (int r = 0; r < env.num_regions(); ++r) {
      if (r == s.robot_at) continue;
      WorldState n = s;
      n.robot_at = r;
      push(n, c + env.move_costs(s.robot_at, r));
    }
    for (int slot : env.regions[s.robot_at].slots) {
      const auto it = std::find(s.placements.begin(), s.placements.end(), slot);
      if (s.holding == kNone && it != s.placements.end()) {
        WorldState n = s;
        n.holding = static_cast<int>(it - s.placements.begin());
        n.placements[n.holding] = kNone;
        push(n, c + 100.0);
      } else if (s.holding != kNone && it == s.placements.end()) {
        WorldState n = s;
        n.placements[s.holding] = slot;
        n.holding = kNone;
        push(n, c + 100.0);
      }
    }
  }
  return std::nullopt;
}

/// Every hand-empty state reachable by relocating objects, one per region
/// assignment (slot choice inside a region does not change any cost), with
/// the given robot location.
inline std::vector<WorldState> all_region_states(const Environment& env, int robot_at) {
  std::vector<WorldState> out;
  WorldState s;
  s.placements.assign(env.objects.size(), kNone);
  s.robot_at = robot_at;
  std::vector<int> used(env.regions.size(), 0);
  auto rec = [&](auto&& self, std::size_t o) -> void {
    if (o == env.objects.size()) {
      out.push_back(s);
      return;
    }
    for (int r = 0; r < env.num_regions(); ++r) {
      if (used[r] >= static_cast<int>(env.regions[r].slots.size())) continue;
      s.placements[o] = env.regions[r].slots[used[r]];
      ++used[r];
      self(self, o + 1);
      --used[r];
    }
    s.placements[o] = kNone;
  };
  rec(rec, 0);
  return out;
}

/// Shortest path on an n x n lattice over the workspace with a 16-neighbour
/// stencil, each step checked as a segment. The stencil overestimates
/// Euclidean length by at most about 2.7%.
inline double grid_distance(const motion::Workspace& ws, Vec2 a, Vec2 b, int n = 200) {
  const double hx = ws.width / (n - 1), hy = ws.height / (n - 1);
  auto at = [&](int i, int j) { return Vec2{i * hx, j * hy}; };
  auto snap = [&](Vec2 p) { return std::pair{static_cast<int>(std::lround(p.x / hx)), static_cast<int>(std::lround(p.y / hy))}; };
  const auto [ai, aj] = snap(a);
  const auto [bi, bj] = snap(b);
  std::vector<double> dist(static_cast<std::size_t>(n) * n, kInfiniteCost);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  const int start = ai * n + aj;
  // the lattice point may sit a fraction of a cell from the true endpoint
  dist[start] = distance(a, at(ai, aj));
  pq.push({dist[start], start});
  static const int di[] = {1, -1, 0, 0, 1, 1, -1, -1, 1, 1, -1, -1, 2, 2, -2, -2};
  static const int dj[] = {0, 0, 1, -1, 1, -1, 1, -1, 2, -2, 2, -2, 1, -1, 1, -1};
  while (!pq.empty()) {
    const auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    const int i = v / n, j = v % n;
    if (i == bi && j == bj) return d + distance(at(i, j), b);
    for (int k = 0; k < 16; ++k) {
      const int ni = i + di[k], nj = j + dj[k];
      if (ni < 0 || nj < 0 || ni >= n || nj >= n) continue;
      if (!ws.segment_free(at(i, j), at(ni, nj))) continue;
      const double nd = d + distance(at(i, j), at(ni, nj));
      const int w = ni * n + nj;
      if (nd < dist[w]) {
        dist[w] = nd;
        pq.push({nd, w});
      }
    }
  }
  return kInfiniteCost;
}

}  // namespace fixtures
