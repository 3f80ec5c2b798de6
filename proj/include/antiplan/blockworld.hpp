#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "antiplan/common.hpp"
#include "antiplan/geometry.hpp"

namespace antiplan {

inline constexpr int kNone = -1;

enum class Color { red, blue, green, yellow, white };

inline constexpr std::array<Color, 5> kPalette = {Color::red, Color::blue, Color::green, Color::yellow,
                                                  Color::white};

struct Rgba {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  double a = 1.0;
  friend bool operator==(const Rgba&, const Rgba&) = default;
};

constexpr Rgba rgba_of(Color c) {
  switch (c) {
    case Color::red: return {1.0, 0.0, 0.0, 1.0};
    case Color::blue: return {0.0, 0.0, 1.0, 1.0};
    case Color::green: return {0.0, 1.0, 0.0, 1.0};
    case Color::yellow: return {1.0, 1.0, 0.0, 1.0};
    case Color::white: return {1.0, 1.0, 1.0, 1.0};
  }
  return {};
}

constexpr std::string_view color_name(Color c) {
  switch (c) {
    case Color::red: return "red";
    case Color::blue: return "blue";
    case Color::green: return "green";
    case Color::yellow: return "yellow";
    case Color::white: return "white";
  }
  return "?";
}

inline std::optional<Color> color_from_name(std::string_view name) {
  for (Color c : kPalette)
    if (color_name(c) == name) return c;
  return std::nullopt;
}

/// Capacity-one placement location inside a region.
struct Slot {
  std::string id;
  Vec2 position;
  int region = kNone;
};

struct Region {
  std::string id;
  Color color = Color::white;
  Rect footprint;
  std::vector<int> slots;  // indices into Environment::slots
  Vec2 approach_point;     // where the robot stands to reach the slots
};

struct ObjectDef {
  std::string id;
  Color color = Color::white;
  std::string semantic_class = "block";
};

/// Full symbolic snapshot. The robot stands at a region's approach point;
/// an object is either in exactly one slot or in the gripper.
struct WorldState {
  std::vector<int> placements;  // object -> slot, kNone while held
  int robot_at = 0;             // region index
  int holding = kNone;          // object index

  friend bool operator==(const WorldState&, const WorldState&) = default;
  friend auto operator<=>(const WorldState&, const WorldState&) = default;
};

struct Directive {
  int object = kNone;
  int region = kNone;
  friend bool operator==(const Directive&, const Directive&) = default;
  friend auto operator<=>(const Directive&, const Directive&) = default;
};

/// One or two placement directives: object must end in some slot of region.
struct TaskSpec {
  std::vector<Directive> directives;
  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
  friend auto operator<=>(const TaskSpec&, const TaskSpec&) = default;
};

struct TaskEntry {
  TaskSpec task;
  double probability = 0.0;
};

struct TaskDistribution {
  std::vector<TaskEntry> entries;

  static TaskDistribution uniform(std::vector<TaskSpec> tasks) {
    TaskDistribution d;
    const double p = 1.0 / static_cast<double>(tasks.size());
    for (auto& t : tasks) d.entries.push_back({std::move(t), p});
    return d;
  }

  bool valid() const {
    if (entries.empty()) return false;
    double sum = 0.0;
    for (const auto& e : entries) {
      if (!(e.probability > 0.0)) return false;
      sum += e.probability;
    }
    return std::abs(sum - 1.0) <= 1e-9;
  }
};

/// Symmetric table of move costs between navigation locations (regions).
class MoveCostTable {
 public:
  MoveCostTable() = default;
  explicit MoveCostTable(int n)
      : n_(n), costs_(static_cast<std::size_t>(n) * n, std::numeric_limits<double>::quiet_NaN()) {
    for (int i = 0; i < n; ++i) costs_[index(i, i)] = 0.0;
  }

  int size() const { return n_; }
  bool has(int a, int b) const { return in_range(a, b) && !std::isnan(costs_[index(a, b)]); }

  Cost operator()(int a, int b) const {
    if (!has(a, b)) throw MissingMoveCost("no move cost for pair (" + std::to_string(a) + "," + std::to_string(b) + ")");
    return costs_[index(a, b)];
  }

  void set(int a, int b, Cost c) {
    costs_[index(a, b)] = c;
    costs_[index(b, a)] = c;
  }

  bool complete() const {
    return std::none_of(costs_.begin(), costs_.end(), [](double c) { return std::isnan(c); });
  }

  friend bool operator==(const MoveCostTable& a, const MoveCostTable& b) {
    if (a.n_ != b.n_) return false;
    for (std::size_t i = 0; i < a.costs_.size(); ++i) {
      const bool an = std::isnan(a.costs_[i]);
      if (an != std::isnan(b.costs_[i])) return false;
      if (!an && a.costs_[i] != b.costs_[i]) return false;
    }
    return true;
  }

 private:
  bool in_range(int a, int b) const { return a >= 0 && b >= 0 && a < n_ && b < n_; }
  std::size_t index(int a, int b) const { return static_cast<std::size_t>(a) * n_ + b; }

  int n_ = 0;
  std::vector<Cost> costs_;
};

struct Environment {
  std::uint64_t seed = 0;
  double width = 10.0;
  double height = 10.0;
  std::vector<Region> regions;
  std::vector<Slot> slots;
  std::vector<ObjectDef> objects;
  double robot_radius = 0.2;
  double cost_per_meter = 25.0;
  TaskDistribution task_distribution;
  WorldState initial_state;
  MoveCostTable move_costs;

  int num_regions() const { return static_cast<int>(regions.size()); }
  int num_slots() const { return static_cast<int>(slots.size()); }
  int num_objects() const { return static_cast<int>(objects.size()); }

  std::optional<int> find_object(std::string_view id) const { return find(objects, id); }
  std::optional<int> find_region(std::string_view id) const { return find(regions, id); }
  std::optional<int> find_slot(std::string_view id) const { return find(slots, id); }

  int object_index(std::string_view id) const { return require(find_object(id), "object", id); }
  int region_index(std::string_view id) const { return require(find_region(id), "region", id); }
  int slot_index(std::string_view id) const { return require(find_slot(id), "slot", id); }

  int region_of_slot(int slot) const { return slots[static_cast<std::size_t>(slot)].region; }

 private:
  template <typename T>
  static std::optional<int> find(const std::vector<T>& items, std::string_view id) {
    for (std::size_t i = 0; i < items.size(); ++i)
      if (items[i].id == id) return static_cast<int>(i);
    return std::nullopt;
  }
  static int require(std::optional<int> i, const char* kind, std::string_view id) {
    if (!i) throw UnknownEntity(std::string("unknown ") + kind + " '" + std::string(id) + "'");
    return *i;
  }
};

/// Blockworld-level transition. Picks and places happen at the approach
/// point of the slot's region.
struct WorldAction {
  enum class Kind { move, pick, place };
  Kind kind = Kind::move;
  int object = kNone;
  int slot = kNone;
  int from = kNone;
  int to = kNone;

  static WorldAction move(int from, int to) { return {Kind::move, kNone, kNone, from, to}; }
  static WorldAction pick(int object, int slot) { return {Kind::pick, object, slot, kNone, kNone}; }
  static WorldAction place(int object, int slot) { return {Kind::place, object, slot, kNone, kNone}; }

  friend bool operator==(const WorldAction&, const WorldAction&) = default;
};

inline std::string to_string(const Environment& env, const WorldAction& a) {
  switch (a.kind) {
    case WorldAction::Kind::move:
      return "move " + env.regions[a.from].id + " -> " + env.regions[a.to].id;
    case WorldAction::Kind::pick:
      return "pick " + env.objects[a.object].id + " from " + env.slots[a.slot].id;
    case WorldAction::Kind::place:
      return "place " + env.objects[a.object].id + " in " + env.slots[a.slot].id;
  }
  return {};
}

/// Which object occupies each slot (kNone if free).
inline std::vector<int> slot_occupants(const Environment& env, const WorldState& s) {
  std::vector<int> occ(env.slots.size(), kNone);
  for (std::size_t o = 0; o < s.placements.size(); ++o)
    if (s.placements[o] != kNone) occ[static_cast<std::size_t>(s.placements[o])] = static_cast<int>(o);
  return occ;
}

inline int region_of_object(const Environment& env, const WorldState& s, int object) {
  const int slot = s.placements[static_cast<std::size_t>(object)];
  return slot == kNone ? kNone : env.region_of_slot(slot);
}

/// Checks every WorldState invariant against env.
inline bool is_valid_state(const Environment& env, const WorldState& s) {
  if (s.placements.size() != env.objects.size()) return false;
  if (s.robot_at < 0 || s.robot_at >= env.num_regions()) return false;
  if (s.holding != kNone && (s.holding < 0 || s.holding >= env.num_objects())) return false;
  std::vector<char> used(env.slots.size(), 0);
  for (int o = 0; o < env.num_objects(); ++o) {
    const int slot = s.placements[static_cast<std::size_t>(o)];
    if (slot == kNone) {
      if (s.holding != o) return false;
      continue;
    }
    if (slot < 0 || slot >= env.num_slots()) return false;
    if (s.holding == o) return false;
    if (used[static_cast<std::size_t>(slot)]) return false;
    used[static_cast<std::size_t>(slot)] = 1;
  }
  return true;
}

inline Cost action_cost(const Environment& env, const WorldAction& a) {
  return a.kind == WorldAction::Kind::move ? env.move_costs(a.from, a.to) : kPickPlaceCost;
}

inline bool is_applicable(const Environment& env, const WorldState& s, const WorldAction& a) {
  switch (a.kind) {
    case WorldAction::Kind::move:
      return a.from == s.robot_at && a.to != a.from && a.to >= 0 && a.to < env.num_regions();
    case WorldAction::Kind::pick:
      return s.holding == kNone && a.object >= 0 && a.object < env.num_objects() &&
             s.placements[static_cast<std::size_t>(a.object)] == a.slot && a.slot != kNone &&
             env.region_of_slot(a.slot) == s.robot_at;
    case WorldAction::Kind::place: {
      if (s.holding == kNone || s.holding != a.object) return false;
      if (a.slot < 0 || a.slot >= env.num_slots() || env.region_of_slot(a.slot) != s.robot_at) return false;
      return std::find(s.placements.begin(), s.placements.end(), a.slot) == s.placements.end();
    }
  }
  return false;
}

inline WorldState apply_action(const Environment& env, const WorldState& s, const WorldAction& a) {
  if (!is_applicable(env, s, a)) throw PreconditionViolation("precondition violated: " + to_string(env, a));
  WorldState next = s;
  switch (a.kind) {
    case WorldAction::Kind::move:
      next.robot_at = a.to;
      break;
    case WorldAction::Kind::pick:
      next.placements[static_cast<std::size_t>(a.object)] = kNone;
      next.holding = a.object;
      break;
    case WorldAction::Kind::place:
      next.placements[static_cast<std::size_t>(a.object)] = a.slot;
      next.holding = kNone;
      break;
  }
  return next;
}

/// All actions applicable in s, in a fixed order (moves, picks, places).
inline std::vector<WorldAction> legal_actions(const Environment& env, const WorldState& s) {
  std::vector<WorldAction> out;
  for (int r = 0; r < env.num_regions(); ++r)
    if (r != s.robot_at) out.push_back(WorldAction::move(s.robot_at, r));
  const auto occ = slot_occupants(env, s);
  for (int slot : env.regions[static_cast<std::size_t>(s.robot_at)].slots) {
    const int o = occ[static_cast<std::size_t>(slot)];
    if (s.holding == kNone && o != kNone) out.push_back(WorldAction::pick(o, slot));
    if (s.holding != kNone && o == kNone) out.push_back(WorldAction::place(s.holding, slot));
  }
  return out;
}

inline void validate_task(const Environment& env, const TaskSpec& task) {
  for (const auto& d : task.directives) {
    if (d.object < 0 || d.object >= env.num_objects())
      throw UnknownEntity("task references unknown object index " + std::to_string(d.object));
    if (d.region < 0 || d.region >= env.num_regions())
      throw UnknownEntity("task references unknown region index " + std::to_string(d.region));
  }
}

/// Every directive's object sits in a slot of its target region and the
/// gripper is empty. Independent of the robot's location.
inline bool is_task_satisfied(const Environment& env, const WorldState& s, const TaskSpec& task) {
  validate_task(env, task);
  if (s.holding != kNone) return false;
  return std::all_of(task.directives.begin(), task.directives.end(), [&](const Directive& d) {
    return region_of_object(env, s, d.object) == d.region;
  });
}

inline TaskSpec sample_task(const TaskDistribution& dist, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& e : dist.entries) {
    acc += e.probability;
    if (u < acc) return e.task;
  }
  return dist.entries.back().task;
}

/// Random hand-empty state: injective placement of all objects and a random
/// robot region.
inline WorldState random_state(const Environment& env, Rng& rng) {
  std::vector<int> slots(env.slots.size());
  std::iota(slots.begin(), slots.end(), 0);
  WorldState s;
  s.placements.resize(env.objects.size());
  for (std::size_t o = 0; o < env.objects.size(); ++o) {
    const std::size_t pick = o + rng.below(slots.size() - o);
    std::swap(slots[o], slots[pick]);
    s.placements[o] = slots[o];
  }
  s.robot_at = static_cast<int>(rng.below(env.regions.size()));
  return s;
}

/// Compact hashable key of a full state.
inline std::string state_key(const WorldState& s) {
  std::string k;
  k.reserve(s.placements.size() + 2);
  k.push_back(static_cast<char>(s.robot_at));
  k.push_back(static_cast<char>(s.holding));
  for (int p : s.placements) k.push_back(static_cast<char>(p));
  return k;
}

/// Key that forgets which slot inside a region each object occupies. Optimal
/// costs of region-level goals and the anticipatory cost depend only on this
/// abstraction, since every cost in the domain is attached to regions.
inline std::string region_key(const Environment& env, const WorldState& s) {
  std::string k;
  k.reserve(s.placements.size() + 2);
  k.push_back(static_cast<char>(s.robot_at));
  k.push_back(static_cast<char>(s.holding));
  for (int p : s.placements) k.push_back(static_cast<char>(p == kNone ? kNone : env.region_of_slot(p)));
  return k;
}

/// "A:red,B:blue" notation.
inline TaskSpec parse_task(const Environment& env, std::string_view text) {
  TaskSpec task;
  std::string item;
  std::stringstream ss{std::string(text)};
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UnknownEntity("malformed directive '" + item + "', expected OBJECT:REGION");
    task.directives.push_back({env.object_index(item.substr(0, colon)), env.region_index(item.substr(colon + 1))});
  }
  if (task.directives.empty()) throw UnknownEntity("empty task");
  return task;
}

inline std::string format_task(const Environment& env, const TaskSpec& task) {
  std::string out;
  for (const auto& d : task.directives) {
    if (!out.empty()) out += ',';
    out += env.objects[static_cast<std::size_t>(d.object)].id + ":" + env.regions[static_cast<std::size_t>(d.region)].id;
  }
  return out;
}

}  // namespace antiplan
