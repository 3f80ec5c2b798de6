#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "antiplan/blockworld.hpp"
#include "antiplan/pddl/domain.hpp"
#include "antiplan/pddl/ground.hpp"
#include "antiplan/pddl/problem.hpp"

namespace antiplan::pddl {

// `pick` follows the published listing with the robot location generalized
// from a slot to the slot's region; `place` and `move` mirror it. InRegion is
// maintained by pick/place so region goals stay conjunctive.
inline constexpr std::string_view kBlockworldDomain = R"PDDL((define (domain blockworld)
  (:requirements :strips :action-costs)
  (:predicates
    (Robot ?r) (Region ?g) (SlotOf ?s ?g)
    (HandEmpty ?r) (Holding ?r ?b) (At ?r ?g)
    (In ?b ?s) (InRegion ?b ?g) (Empty ?s))
  (:functions (total-cost) (move-cost ?from ?to))

  (:action move
    :parameters (?r ?from ?to)
    :precondition (and (Robot ?r) (At ?r ?from) (Region ?to))
    :effect (and (At ?r ?to) (not (At ?r ?from))
                 (increase (total-cost) (move-cost ?from ?to))))

  (:action pick
    :parameters (?r ?b ?s ?g)
    :precondition (and (Robot ?r) (HandEmpty ?r) (At ?r ?g) (SlotOf ?s ?g) (In ?b ?s))
    :effect (and (Holding ?r ?b) (not (In ?b ?s))
                 (not (HandEmpty ?r))
                 (not (InRegion ?b ?g)) (Empty ?s)
                 (increase (total-cost) 100)))

  (:action place
    :parameters (?r ?b ?s ?g)
    :precondition (and (Robot ?r) (Holding ?r ?b) (At ?r ?g) (SlotOf ?s ?g) (Empty ?s))
    :effect (and (In ?b ?s) (InRegion ?b ?g) (HandEmpty ?r)
                 (not (Holding ?r ?b)) (not (Empty ?s))
                 (increase (total-cost) 100)))
)
)PDDL";

inline constexpr std::string_view kRobotName = "robot";

inline const PddlDomain& blockworld_domain() {
  static const PddlDomain domain = parse_domain(kBlockworldDomain);
  return domain;
}

/// Fluent atoms describing s (static atoms excluded).
inline std::vector<GroundAtom> state_atoms(const Environment& env, const WorldState& s) {
  const std::string robot(kRobotName);
  std::vector<GroundAtom> atoms;
  atoms.push_back({"At", {robot, env.regions[static_cast<std::size_t>(s.robot_at)].id}});
  if (s.holding == kNone) {
    atoms.push_back({"HandEmpty", {robot}});
  } else {
    atoms.push_back({"Holding", {robot, env.objects[static_cast<std::size_t>(s.holding)].id}});
  }
  const auto occ = slot_occupants(env, s);
  for (int slot = 0; slot < env.num_slots(); ++slot) {
    const int o = occ[static_cast<std::size_t>(slot)];
    const auto& sid = env.slots[static_cast<std::size_t>(slot)].id;
    if (o == kNone) {
      atoms.push_back({"Empty", {sid}});
    } else {
      const auto& oid = env.objects[static_cast<std::size_t>(o)].id;
      atoms.push_back({"In", {oid, sid}});
      atoms.push_back({"InRegion", {oid, env.regions[static_cast<std::size_t>(env.region_of_slot(slot))].id}});
    }
  }
  return atoms;
}

inline std::vector<GroundAtom> task_goal_atoms(const Environment& env, const TaskSpec& task) {
  validate_task(env, task);
  std::vector<GroundAtom> goal;
  for (const auto& d : task.directives)
    goal.push_back({"InRegion", {env.objects[static_cast<std::size_t>(d.object)].id, env.regions[static_cast<std::size_t>(d.region)].id}});
  goal.push_back({"HandEmpty", {std::string(kRobotName)}});
  return goal;
}

/// PDDL-level problem for (env, s0, task). Every ordered pair of distinct
/// regions present in move_costs becomes a (move-cost a b) value.
inline ProblemInstance make_instance(const Environment& env, const WorldState& s0, const TaskSpec& task,
                                     const MoveCostTable& move_costs) {
  if (!is_valid_state(env, s0)) throw UnknownEntity("initial state does not match the environment");
  ProblemInstance p;
  p.name = "blockworld-" + std::to_string(env.seed);
  p.domain = "blockworld";
  const std::string robot(kRobotName);
  p.objects.push_back(robot);
  for (const auto& r : env.regions) p.objects.push_back(r.id);
  for (const auto& s : env.slots) p.objects.push_back(s.id);
  for (const auto& o : env.objects) p.objects.push_back(o.id);

  p.init.push_back({"Robot", {robot}});
  for (const auto& r : env.regions) p.init.push_back({"Region", {r.id}});
  for (const auto& s : env.slots) p.init.push_back({"SlotOf", {s.id, env.regions[static_cast<std::size_t>(s.region)].id}});
  for (auto& a : state_atoms(env, s0)) p.init.push_back(std::move(a));
  for (int a = 0; a < env.num_regions(); ++a)
    for (int b = 0; b < env.num_regions(); ++b)
      if (a != b && move_costs.has(a, b))
        p.function_values[GroundAtom{"move-cost", {env.regions[static_cast<std::size_t>(a)].id, env.regions[static_cast<std::size_t>(b)].id}}] = move_costs(a, b);
  p.goal = task_goal_atoms(env, task);
  return p;
}

inline std::string render_problem(const Environment& env, const WorldState& s0, const TaskSpec& task) {
  return render_problem(make_instance(env, s0, task, env.move_costs));
}

inline GroundedProblem ground(const PddlDomain& domain, const Environment& env, const WorldState& s0,
                              const TaskSpec& task, const MoveCostTable& move_costs) {
  return ground(domain, make_instance(env, s0, task, move_costs));
}

/// Grounds the blockworld domain once per environment and maps between
/// world states and fact sets. The action set does not depend on the initial
/// state because every placement is reachable while a slot is free.
class GroundedWorld {
 public:
  explicit GroundedWorld(const Environment& env)
      : env_(&env), problem_(ground(blockworld_domain(), env, env.initial_state, TaskSpec{}, env.move_costs)) {
    const std::string robot(kRobotName);
    auto id = [&](GroundAtom a) {
      const auto i = problem_.fact_index(a);
      if (!i) throw Error("blockworld grounding is missing fact " + to_string(a));
      return *i;
    };
    const auto R = static_cast<std::size_t>(env.num_regions());
    const auto S = static_cast<std::size_t>(env.num_slots());
    const auto B = static_cast<std::size_t>(env.num_objects());
    at_.resize(R);
    empty_.resize(S);
    holding_.resize(B);
    in_.resize(B * S);
    in_region_.resize(B * R);
    for (std::size_t g = 0; g < R; ++g) at_[g] = id({"At", {robot, env.regions[g].id}});
    for (std::size_t s = 0; s < S; ++s) empty_[s] = id({"Empty", {env.slots[s].id}});
    hand_empty_ = id({"HandEmpty", {robot}});
    for (std::size_t b = 0; b < B; ++b) {
      holding_[b] = id({"Holding", {robot, env.objects[b].id}});
      for (std::size_t s = 0; s < S; ++s) in_[b * S + s] = id({"In", {env.objects[b].id, env.slots[s].id}});
      for (std::size_t g = 0; g < R; ++g) in_region_[b * R + g] = id({"InRegion", {env.objects[b].id, env.regions[g].id}});
    }
    actions_.reserve(problem_.actions.size());
    for (const auto& a : problem_.actions) {
      if (a.name == "move") {
        actions_.push_back(WorldAction::move(env.region_index(a.args[1]), env.region_index(a.args[2])));
      } else if (a.name == "pick") {
        actions_.push_back(WorldAction::pick(env.object_index(a.args[1]), env.slot_index(a.args[2])));
      } else {
        actions_.push_back(WorldAction::place(env.object_index(a.args[1]), env.slot_index(a.args[2])));
      }
    }
    move_flags_.resize(actions_.size(), 0);
    for (std::size_t i = 0; i < actions_.size(); ++i) move_flags_[i] = actions_[i].kind == WorldAction::Kind::move;
    metric_moves_ = env.move_costs.size() == env.num_regions();
    for (int a = 0; a < env.num_regions() && metric_moves_; ++a)
      for (int b = 0; b < env.num_regions() && metric_moves_; ++b)
        for (int m = 0; m < env.num_regions() && metric_moves_; ++m)
          if (a != b && env.move_costs(a, m) + env.move_costs(m, b) < env.move_costs(a, b)) metric_moves_ = false;
    dist_.assign(R * R, kInfiniteCost);
    for (std::size_t a = 0; a < R; ++a)
      for (std::size_t b = 0; b < R; ++b)
        if (a == b) {
          dist_[a * R + b] = 0.0;
        } else if (env.move_costs.has(static_cast<int>(a), static_cast<int>(b))) {
          dist_[a * R + b] = env.move_costs(static_cast<int>(a), static_cast<int>(b));
        }
    for (std::size_t m = 0; m < R; ++m)
      for (std::size_t a = 0; a < R; ++a)
        for (std::size_t b = 0; b < R; ++b) dist_[a * R + b] = std::min(dist_[a * R + b], dist_[a * R + m] + dist_[m * R + b]);
    blockers_.resize(actions_.size());
    for (std::size_t i = 0; i < actions_.size(); ++i) {
      const auto& a = actions_[i];
      if (a.kind != WorldAction::Kind::place) continue;
      const auto& slots = env.regions[static_cast<std::size_t>(env.region_of_slot(a.slot))].slots;
      for (int s : slots) {
        if (s == a.slot) break;
        blockers_[i].push_back(empty_[static_cast<std::size_t>(s)]);
      }
    }
  }

  const Environment& environment() const { return *env_; }
  const GroundedProblem& problem() const { return problem_; }

  /// For each action, facts that rule it out under slot symmetry breaking:
  /// a place is only taken into the lowest-numbered empty slot of its
  /// region. Sound for goals that only constrain region membership, since
  /// every cost is attached to regions rather than slots.
  const std::vector<std::vector<FactId>>& region_symmetry_blockers() const { return blockers_; }

  /// Move flags for consecutive-move pruning, or nullptr when the move costs
  /// violate the triangle inequality.
  const std::vector<char>* move_flags() const { return metric_moves_ ? &move_flags_ : nullptr; }
  const WorldAction& world_action(int ground_action) const { return actions_[static_cast<std::size_t>(ground_action)]; }

  std::vector<FactId> facts_of(const WorldState& s) const {
    const auto S = static_cast<std::size_t>(env_->num_slots());
    const auto R = static_cast<std::size_t>(env_->num_regions());
    std::vector<FactId> f;
    f.push_back(at_[static_cast<std::size_t>(s.robot_at)]);
    f.push_back(s.holding == kNone ? hand_empty_ : holding_[static_cast<std::size_t>(s.holding)]);
    std::vector<char> used(S, 0);
    for (std::size_t b = 0; b < s.placements.size(); ++b) {
      const int slot = s.placements[b];
      if (slot == kNone) continue;
      used[static_cast<std::size_t>(slot)] = 1;
      f.push_back(in_[b * S + static_cast<std::size_t>(slot)]);
      f.push_back(in_region_[b * R + static_cast<std::size_t>(env_->region_of_slot(slot))]);
    }
    for (std::size_t s2 = 0; s2 < S; ++s2)
      if (!used[s2]) f.push_back(empty_[s2]);
    std::sort(f.begin(), f.end());
    return f;
  }

  std::vector<FactId> goal_of(const TaskSpec& task) const {
    validate_task(*env_, task);
    const auto R = static_cast<std::size_t>(env_->num_regions());
    std::vector<FactId> g{hand_empty_};
    for (const auto& d : task.directives) g.push_back(in_region_[static_cast<std::size_t>(d.object) * R + static_cast<std::size_t>(d.region)]);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
  }

  /// Exact placement conjunction of target plus an empty hand. The robot
  /// location is part of the goal only when asked for.
  std::vector<FactId> goal_of_state(const WorldState& target, bool with_robot = false) const {
    const auto S = static_cast<std::size_t>(env_->num_slots());
    std::vector<FactId> g{hand_empty_};
    if (with_robot) g.push_back(at_[static_cast<std::size_t>(target.robot_at)]);
    for (std::size_t b = 0; b < target.placements.size(); ++b)
      if (target.placements[b] != kNone) g.push_back(in_[b * S + static_cast<std::size_t>(target.placements[b])]);
    std::sort(g.begin(), g.end());
    return g;
  }

  /// Every object in its target region, the hand empty and the robot at the
  /// target location. Slots inside a region are left free.
  std::vector<FactId> goal_of_region_state(const WorldState& target) const {
    const auto R = static_cast<std::size_t>(env_->num_regions());
    std::vector<FactId> g{hand_empty_, at_[static_cast<std::size_t>(target.robot_at)]};
    for (std::size_t b = 0; b < target.placements.size(); ++b)
      if (target.placements[b] != kNone)
        g.push_back(in_region_[b * R + static_cast<std::size_t>(env_->region_of_slot(target.placements[b]))]);
    std::sort(g.begin(), g.end());
    return g;
  }

  /// Admissible lower bound on the cost of reaching `goal` (as built by the
  /// goal_of* functions): one pick per misplaced goal object, one place per
  /// goal object not yet in its target and per held free object, a pick and
  /// a place per occupant that must make room, plus the cheapest tour that
  /// reaches the farthest region needing a visit (and then the robot target).
  class CountingBound {
   public:
    Cost operator()(std::span<const std::uint64_t> bits) const {
      const auto& w = *w_;
      const Environment& env = *w.env_;
      const auto S = static_cast<std::size_t>(env.num_slots());
      const auto B = static_cast<std::size_t>(env.num_objects());
      const auto R = static_cast<std::size_t>(env.num_regions());
      auto test = [&](FactId f) { return (bits[static_cast<std::size_t>(f) >> 6] >> (static_cast<unsigned>(f) & 63U)) & 1U; };
      std::size_t robot = 0;
      for (std::size_t g = 0; g < R; ++g)
        if (test(w.at_[g])) robot = g;
      pos_.assign(B, kNone);
      occ_.assign(S, kNone);
      int held = kNone;
      for (std::size_t b = 0; b < B; ++b) {
        if (test(w.holding_[b])) {
          held = static_cast<int>(b);
          continue;
        }
        for (std::size_t s = 0; s < S; ++s)
          if (test(w.in_[b * S + s])) {
            pos_[b] = static_cast<int>(s);
            occ_[s] = static_cast<int>(b);
            break;
          }
      }
      Cost h = 0.0;
      Cost tour = 0.0;
      auto visit = [&](int g) {
        const auto gi = static_cast<std::size_t>(g);
        Cost c = w.dist_[robot * R + gi];
        if (robot_goal_ != kNone) c += w.dist_[gi * R + static_cast<std::size_t>(robot_goal_)];
        tour = std::max(tour, c);
      };
      if (robot_goal_ != kNone) visit(robot_goal_);
      for (std::size_t b = 0; b < B; ++b) {
        const int ts = slot_goal_[b], tr = region_goal_[b];
        const int p = pos_[b];
        if (ts == kNone && tr == kNone) {
          if (held == static_cast<int>(b)) h += kManipulationCost;
          continue;
        }
        if (p != kNone && (ts != kNone ? p == ts : env.region_of_slot(p) == tr)) continue;
        if (p != kNone) {
          h += kManipulationCost;
          visit(env.region_of_slot(p));
        }
        h += kManipulationCost;
        visit(ts != kNone ? env.region_of_slot(ts) : tr);
        if (ts != kNone && occ_[static_cast<std::size_t>(ts)] != kNone) {
          const auto x = static_cast<std::size_t>(occ_[static_cast<std::size_t>(ts)]);
          if (slot_goal_[x] == kNone && region_goal_[x] == kNone) h += 2 * kManipulationCost;
        }
      }
      // free occupants of a region that cannot all stay next to the goal
      // objects bound for it
      for (std::size_t g = 0; g < R; ++g) {
        if (room_[g] < 0) continue;
        int free_occupants = 0;
        for (int s : env.regions[g].slots) {
          const int x = occ_[static_cast<std::size_t>(s)];
          if (x != kNone && slot_goal_[static_cast<std::size_t>(x)] == kNone && region_goal_[static_cast<std::size_t>(x)] == kNone) ++free_occupants;
        }
        const int forced = free_occupants - room_[g];
        if (forced > 0) {
          h += 2 * kManipulationCost * forced;
          visit(static_cast<int>(g));
        }
      }
      return h + tour;
    }

   private:
    friend class GroundedWorld;
    static constexpr Cost kManipulationCost = 100.0;
    const GroundedWorld* w_ = nullptr;
    std::vector<int> slot_goal_, region_goal_;
    std::vector<int> room_;  // slots left for free objects, -1 when unconstrained
    int robot_goal_ = kNone;
    mutable std::vector<int> pos_, occ_;
  };

  CountingBound counting_bound(std::span<const FactId> goal) const {
    const auto S = static_cast<std::size_t>(env_->num_slots());
    const auto B = static_cast<std::size_t>(env_->num_objects());
    const auto R = static_cast<std::size_t>(env_->num_regions());
    CountingBound cb;
    cb.w_ = this;
    cb.slot_goal_.assign(B, kNone);
    cb.region_goal_.assign(B, kNone);
    cb.room_.assign(R, -1);
    bool any_region = false;
    for (FactId f : goal) {
      if (const auto it = std::find(at_.begin(), at_.end(), f); it != at_.end()) cb.robot_goal_ = static_cast<int>(it - at_.begin());
      if (const auto it = std::find(in_.begin(), in_.end(), f); it != in_.end()) {
        const auto i = static_cast<std::size_t>(it - in_.begin());
        cb.slot_goal_[i / S] = static_cast<int>(i % S);
      }
      if (const auto it = std::find(in_region_.begin(), in_region_.end(), f); it != in_region_.end()) {
        const auto i = static_cast<std::size_t>(it - in_region_.begin());
        cb.region_goal_[i / R] = static_cast<int>(i % R);
        any_region = true;
      }
    }
    if (any_region) {
      for (std::size_t g = 0; g < R; ++g) cb.room_[g] = static_cast<int>(env_->regions[g].slots.size());
      for (std::size_t b = 0; b < B; ++b) {
        if (cb.region_goal_[b] != kNone) --cb.room_[static_cast<std::size_t>(cb.region_goal_[b])];
        if (cb.slot_goal_[b] != kNone) --cb.room_[static_cast<std::size_t>(env_->region_of_slot(cb.slot_goal_[b]))];
      }
      for (auto& r : cb.room_) r = std::max(r, 0);
    }
    return cb;
  }

  WorldState state_of(std::span<const FactId> facts) const {
    const auto S = static_cast<std::size_t>(env_->num_slots());
    WorldState s;
    s.placements.assign(static_cast<std::size_t>(env_->num_objects()), kNone);
    std::vector<char> truth(problem_.facts.size(), 0);
    for (FactId f : facts) truth[static_cast<std::size_t>(f)] = 1;
    for (std::size_t g = 0; g < at_.size(); ++g)
      if (truth[static_cast<std::size_t>(at_[g])]) s.robot_at = static_cast<int>(g);
    for (std::size_t b = 0; b < holding_.size(); ++b) {
      if (truth[static_cast<std::size_t>(holding_[b])]) s.holding = static_cast<int>(b);
      for (std::size_t sl = 0; sl < S; ++sl)
        if (truth[static_cast<std::size_t>(in_[b * S + sl])]) s.placements[b] = static_cast<int>(sl);
    }
    return s;
  }

 private:
  const Environment* env_;
  GroundedProblem problem_;
  std::vector<WorldAction> actions_;
  std::vector<std::vector<FactId>> blockers_;
  std::vector<char> move_flags_;
  bool metric_moves_ = false;
  std::vector<FactId> at_, empty_, holding_, in_, in_region_;
  std::vector<Cost> dist_;  // shortest move cost between regions
  FactId hand_empty_ = 0;
};

}  // namespace antiplan::pddl
