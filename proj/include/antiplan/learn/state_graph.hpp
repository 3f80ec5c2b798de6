#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <utility>
#include <vector>

#include "antiplan/blockworld.hpp"

namespace antiplan::learn {

inline constexpr int kFeatureDim = 9;

enum class EntityType { room = 0, location = 1, object = 2 };

using NodeFeature = std::array<double, kFeatureDim>;

/// Containment graph of a state: one environment node, then regions, slots
/// and objects, each group ordered by id.
struct StateGraph {
  std::vector<NodeFeature> nodes;
  std::vector<std::pair<int, int>> edges;  // undirected

  friend bool operator==(const StateGraph&, const StateGraph&) = default;
};

// [type one-hot x3, r, g, b, a, x, y]
inline NodeFeature make_feature(EntityType type, Rgba color, Vec2 pos) {
  NodeFeature f{};
  f[static_cast<std::size_t>(type)] = 1.0;
  f[3] = color.r;
  f[4] = color.g;
  f[5] = color.b;
  f[6] = color.a;
  f[7] = pos.x;
  f[8] = pos.y;
  return f;
}

namespace detail {

template <typename T>
std::vector<int> order_by_id(const std::vector<T>& items) {
  std::vector<int> idx(items.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return items[static_cast<std::size_t>(a)].id < items[static_cast<std::size_t>(b)].id;
  });
  return idx;
}

}  // namespace detail

/// The environment node is colorless and sits at the workspace center. A
/// held object hangs off the environment node at the robot's position.
inline StateGraph encode_state(const Environment& env, const WorldState& s) {
  StateGraph g;
  auto norm = [&](Vec2 p) { return Vec2{p.x / env.width, p.y / env.height}; };
  g.nodes.push_back(make_feature(EntityType::room, Rgba{0, 0, 0, 0}, Vec2{0.5, 0.5}));

  const auto regions = detail::order_by_id(env.regions);
  const auto slots = detail::order_by_id(env.slots);
  const auto objects = detail::order_by_id(env.objects);
  std::vector<int> region_node(env.regions.size()), slot_node(env.slots.size());

  for (int r : regions) {
    const auto& reg = env.regions[static_cast<std::size_t>(r)];
    region_node[static_cast<std::size_t>(r)] = static_cast<int>(g.nodes.size());
    g.edges.emplace_back(0, static_cast<int>(g.nodes.size()));
    g.nodes.push_back(make_feature(EntityType::location, rgba_of(reg.color), norm(reg.footprint.center())));
  }
  for (int sl : slots) {
    const auto& slot = env.slots[static_cast<std::size_t>(sl)];
    slot_node[static_cast<std::size_t>(sl)] = static_cast<int>(g.nodes.size());
    g.edges.emplace_back(region_node[static_cast<std::size_t>(slot.region)], static_cast<int>(g.nodes.size()));
    g.nodes.push_back(make_feature(EntityType::location, rgba_of(env.regions[static_cast<std::size_t>(slot.region)].color),
                                   norm(slot.position)));
  }
  for (int o : objects) {
    const auto& obj = env.objects[static_cast<std::size_t>(o)];
    const int at = s.placements[static_cast<std::size_t>(o)];
    const int me = static_cast<int>(g.nodes.size());
    if (at == kNone) {
      g.edges.emplace_back(0, me);
      g.nodes.push_back(make_feature(EntityType::object, rgba_of(obj.color),
                                     norm(env.regions[static_cast<std::size_t>(s.robot_at)].approach_point)));
    } else {
      g.edges.emplace_back(slot_node[static_cast<std::size_t>(at)], me);
      g.nodes.push_back(make_feature(EntityType::object, rgba_of(obj.color), norm(env.slots[static_cast<std::size_t>(at)].position)));
    }
  }
  return g;
}

}  // namespace antiplan::learn
