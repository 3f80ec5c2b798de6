#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "antiplan/blockworld.hpp"
#include "antiplan/motion/move_costs.hpp"
#include "antiplan/planner/task_solver.hpp"

namespace antiplan {

struct GenerationParams {
  double width = 10.0;
  double height = 10.0;
  int min_regions = 5;
  int max_regions = 7;
  int min_slots = 2;
  int max_slots = 4;
  int min_objects = 5;
  int max_objects = 8;
  int min_tasks = 20;
  int max_tasks = 25;
  double robot_radius = 0.2;
  double cost_per_meter = 25.0;
  double slot_pitch = 0.5;      // spacing between neighboring slots
  double region_depth = 0.8;
  double clearance = 0.6;       // free corridor kept between footprints
  int max_attempts = 1000;
  motion::MotionParams motion;
};

namespace detail {

inline std::string region_name(Color c, int ordinal) {
  std::string n(color_name(c));
  return ordinal == 1 ? n : n + std::to_string(ordinal);
}

// Colors with at least one white and at least three distinct non-white
// entries' worth of non-white items.
inline std::vector<Color> draw_colors(int count, Rng& rng) {
  std::vector<Color> out{Color::white};
  const Color non_white[] = {Color::red, Color::blue, Color::green, Color::yellow};
  for (int i = 0; i < 3; ++i) out.push_back(non_white[rng.below(4)]);
  while (static_cast<int>(out.size()) < count) out.push_back(kPalette[rng.below(kPalette.size())]);
  rng.shuffle(out);
  return out;
}

inline bool try_layout(Environment& env, const GenerationParams& p, Rng& rng) {
  const int n_regions = rng.between(p.min_regions, p.max_regions);
  auto colors = draw_colors(n_regions, rng);
  // non-white regions need distinct names; duplicates get an ordinal suffix
  std::map<Color, int> seen;
  const double r = p.robot_radius;
  const double reach = r + 0.25;  // approach point offset from the footprint edge
  std::vector<Rect> placed;
  env.regions.clear();
  env.slots.clear();
  for (int g = 0; g < n_regions; ++g) {
    const int n_slots = rng.between(p.min_slots, p.max_slots);
    const bool horizontal = rng.below(2) == 0;
    const double len = p.slot_pitch * n_slots + 0.2;
    const double w = horizontal ? len : p.region_depth;
    const double h = horizontal ? p.region_depth : len;
    const double margin = 2.0 * r + reach;
    if (w + 2 * margin > p.width || h + 2 * margin > p.height) return false;
    Rect fp;
    bool ok = false;
    for (int tries = 0; tries < 200 && !ok; ++tries) {
      const double x0 = rng.uniform(margin, p.width - margin - w);
      const double y0 = rng.uniform(margin, p.height - margin - h);
      fp = {x0, y0, x0 + w, y0 + h};
      ok = std::none_of(placed.begin(), placed.end(), [&](const Rect& o) { return o.inflated(p.clearance + reach + 2 * r).overlaps(fp); });
    }
    if (!ok) return false;
    placed.push_back(fp);

    Region region;
    region.color = colors[static_cast<std::size_t>(g)];
    region.id = region_name(region.color, ++seen[region.color]);
    region.footprint = fp;
    // approach from the long side facing the workspace center
    const Vec2 c = fp.center();
    if (horizontal) {
      region.approach_point = c.y < p.height / 2 ? Vec2{c.x, fp.y1 + r + reach} : Vec2{c.x, fp.y0 - r - reach};
    } else {
      region.approach_point = c.x < p.width / 2 ? Vec2{fp.x1 + r + reach, c.y} : Vec2{fp.x0 - r - reach, c.y};
    }
    for (int s = 0; s < n_slots; ++s) {
      const double t = 0.1 + p.slot_pitch * (s + 0.5);
      Slot slot;
      slot.id = region.id + "_s" + std::to_string(s + 1);
      slot.position = horizontal ? Vec2{fp.x0 + t, c.y} : Vec2{c.x, fp.y0 + t};
      slot.region = g;
      region.slots.push_back(static_cast<int>(env.slots.size()));
      env.slots.push_back(slot);
    }
    env.regions.push_back(std::move(region));
  }
  const auto ws = motion::workspace_of(env);
  for (const auto& reg : env.regions)
    if (!ws.point_free(reg.approach_point)) return false;
  return true;
}

inline bool try_objects(Environment& env, const GenerationParams& p, Rng& rng) {
  const int n_objects = rng.between(p.min_objects, p.max_objects);
  // keep at least two free slots so every placement stays reachable
  if (n_objects + 2 > env.num_slots()) return false;
  auto colors = draw_colors(n_objects, rng);
  env.objects.clear();
  for (int o = 0; o < n_objects; ++o)
    env.objects.push_back({std::string(1, static_cast<char>('A' + o)), colors[static_cast<std::size_t>(o)], "block"});
  env.initial_state = random_state(env, rng);
  return true;
}

inline std::vector<int> non_white(const auto& items) {
  std::vector<int> out;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].color != Color::white) out.push_back(static_cast<int>(i));
  return out;
}

inline bool try_tasks(Environment& env, const GenerationParams& p, Rng& rng, planner::TaskSolver& solver) {
  const auto objs = non_white(env.objects);
  const auto regs = non_white(env.regions);
  const int want = rng.between(p.min_tasks, p.max_tasks);
  std::set<TaskSpec> chosen;
  std::vector<TaskSpec> order;
  for (int attempt = 0; attempt < 100 * want && static_cast<int>(order.size()) < want; ++attempt) {
    TaskSpec t;
    const int k = objs.size() >= 2 && rng.below(2) == 0 ? 2 : 1;
    const int o1 = objs[rng.below(objs.size())];
    t.directives.push_back({o1, regs[rng.below(regs.size())]});
    if (k == 2) {
      int o2 = o1;
      while (o2 == o1) o2 = objs[rng.below(objs.size())];
      t.directives.push_back({o2, regs[rng.below(regs.size())]});
      std::sort(t.directives.begin(), t.directives.end());
    }
    if (chosen.count(t)) continue;
    if (!solver.task_cost(env.initial_state, t)) continue;
    chosen.insert(t);
    order.push_back(t);
  }
  if (static_cast<int>(order.size()) < p.min_tasks) return false;
  env.task_distribution = TaskDistribution::uniform(std::move(order));
  return true;
}

}  // namespace detail

/// Deterministic procedural environment for a seed.
inline Environment generate_environment(std::uint64_t seed, const GenerationParams& p = {}) {
  Rng rng(derive_seed(seed, 0x67656eULL));
  for (int attempt = 0; attempt < p.max_attempts; ++attempt) {
    Environment env;
    env.seed = seed;
    env.width = p.width;
    env.height = p.height;
    env.robot_radius = p.robot_radius;
    env.cost_per_meter = p.cost_per_meter;
    if (!detail::try_layout(env, p, rng)) continue;
    if (!detail::try_objects(env, p, rng)) continue;
    try {
      env.move_costs = motion::compute_move_costs(env, p.cost_per_meter, p.motion);
    } catch (const UnreachableLocation&) {
      continue;
    }
    planner::TaskSolver solver(env);
    if (!detail::try_tasks(env, p, rng, solver)) continue;
    return env;
  }
  throw GenerationFailure("no valid environment for seed " + std::to_string(seed) + " after " + std::to_string(p.max_attempts) +
                          " attempts");
}

}  // namespace antiplan
