#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "antiplan/blockworld.hpp"
#include "antiplan/pddl/blockworld.hpp"
#include "antiplan/planner/astar.hpp"

namespace antiplan::planner {

/// A plan lifted back to blockworld actions.
struct WorldPlan {
  std::vector<WorldAction> actions;
  std::vector<int> ground_actions;
  Cost cost = 0.0;
  std::size_t expanded = 0;
  WorldState final_state;

  /// States after each action, the final state included.
  std::vector<WorldState> trajectory(const Environment& env, const WorldState& s0) const {
    std::vector<WorldState> out;
    WorldState s = s0;
    for (const auto& a : actions) {
      s = apply_action(env, s, a);
      out.push_back(s);
    }
    return out;
  }
};

/// Optimal planning against one environment. Grounds the domain once and
/// memoizes task costs by region-level state. Not thread-safe; use one
/// solver per worker.
class TaskSolver {
 public:
  explicit TaskSolver(const Environment& env)
      : env_(&env), world_(std::make_unique<pddl::GroundedWorld>(env)),
        compiled_(std::make_unique<CompiledTask>(world_->problem())),
        search_(std::make_unique<AStar>(*compiled_)) {}

  const Environment& environment() const { return *env_; }
  const pddl::GroundedWorld& world() const { return *world_; }
  const CompiledTask& compiled() const { return *compiled_; }

  std::optional<WorldPlan> plan_task(const WorldState& s0, const TaskSpec& task) {
    SearchOptions opt;
    opt.blockers = &world_->region_symmetry_blockers();
    opt.no_chain = world_->move_flags();
    return run(s0, world_->goal_of(task), opt);
  }

  /// Cheapest way to reach exactly target's placements with an empty hand,
  /// and its robot location too when pin_robot is set.
  std::optional<WorldPlan> plan_to_state(const WorldState& s0, const WorldState& target, bool pin_robot = false) {
    if (!is_valid_state(*env_, target) || target.holding != kNone) throw UnknownEntity("target state is not a valid hand-empty state");
    SearchOptions opt;
    opt.no_chain = world_->move_flags();
    return run(s0, world_->goal_of_state(target, pin_robot), opt);
  }

  /// Cheapest way to put every object into the region it has in target and
  /// end at target's robot location. Equals plan_to_state up to which slot
  /// of a region each object lands in.
  std::optional<WorldPlan> plan_to_region_state(const WorldState& s0, const WorldState& target) {
    if (!is_valid_state(*env_, target) || target.holding != kNone) throw UnknownEntity("target state is not a valid hand-empty state");
    SearchOptions opt;
    opt.blockers = &world_->region_symmetry_blockers();
    opt.no_chain = world_->move_flags();
    return run(s0, world_->goal_of_region_state(target), opt);
  }

  /// V* of the task from s0, or nullopt when unsolvable. Cached.
  std::optional<Cost> task_cost(const WorldState& s0, const TaskSpec& task) {
    if (is_task_satisfied(*env_, s0, task)) return 0.0;
    std::string key = cache_key(s0, task);
    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
    const auto p = plan_task(s0, task);
    std::optional<Cost> c;
    if (p) c = p->cost;
    cache_.emplace(std::move(key), c);
    return c;
  }

  /// Admissible bound on task_cost: the cached value when known, hmax
  /// and the counting bound otherwise (infinite when the relaxation fails).
  Cost task_cost_bound(const WorldState& s0, const TaskSpec& task) {
    if (is_task_satisfied(*env_, s0, task)) return 0.0;
    if (const auto it = cache_.find(cache_key(s0, task)); it != cache_.end()) return it->second ? *it->second : kInfiniteCost;
    const auto bits = to_bits(*compiled_, world_->facts_of(s0));
    const auto goal = world_->goal_of(task);
    const Cost h = hmax_(bits, goal);
    return h == kInfiniteCost ? h : std::max(h, world_->counting_bound(goal)(bits));
  }

  bool is_cached(const WorldState& s0, const TaskSpec& task) const {
    return is_task_satisfied(*env_, s0, task) || cache_.count(cache_key(s0, task)) > 0;
  }

  std::size_t cache_size() const { return cache_.size(); }

 private:
  std::optional<WorldPlan> run(const WorldState& s0, const std::vector<FactId>& goal, const SearchOptions& opt) {
    if (!is_valid_state(*env_, s0)) throw UnknownEntity("state does not match the environment");
    const auto init = world_->facts_of(s0);
    SearchOptions o = opt;
    o.lower_bound = [cb = world_->counting_bound(goal)](std::span<const std::uint64_t> bits) { return cb(bits); };
    const auto result = search_->solve(init, goal, o);
    if (!result) return std::nullopt;
    WorldPlan wp;
    wp.ground_actions = result->actions;
    wp.cost = result->cost;
    wp.expanded = result->expanded;
    WorldState s = s0;
    for (int a : result->actions) {
      wp.actions.push_back(world_->world_action(a));
      s = apply_action(*env_, s, wp.actions.back());
    }
    wp.final_state = std::move(s);
    return wp;
  }

  std::string cache_key(const WorldState& s0, const TaskSpec& task) const {
    std::string key = region_key(*env_, s0);
    key.push_back('|');
    for (const auto& d : task.directives) {
      key.push_back(static_cast<char>(d.object));
      key.push_back(static_cast<char>(d.region));
    }
    return key;
  }

  const Environment* env_;
  std::unique_ptr<pddl::GroundedWorld> world_;
  std::unique_ptr<CompiledTask> compiled_;
  std::unique_ptr<AStar> search_;
  HmaxEvaluator hmax_{*compiled_};
  std::unordered_map<std::string, std::optional<Cost>> cache_;
};

/// V*_task(s0). Throws UnsolvableTask when no plan exists.
inline Cost optimal_cost(const Environment& env, const WorldState& s0, const TaskSpec& task) {
  if (is_task_satisfied(env, s0, task)) return 0.0;
  TaskSolver solver(env);
  const auto c = solver.task_cost(s0, task);
  if (!c) throw UnsolvableTask("task " + format_task(env, task) + " has no plan");
  return *c;
}

struct SequenceSolution {
  std::vector<WorldState> states;  // chosen goal state per task
  Cost total = 0.0;
};

/// Exhaustive minimization of the chained state-to-state cost over the
/// product of per-task candidate goal states. Small inputs only.
inline SequenceSolution sequence_oracle(const Environment& env, const WorldState& s0, const std::vector<TaskSpec>& tasks,
                                        const std::vector<std::vector<WorldState>>& candidates) {
  if (tasks.size() != candidates.size()) throw DimensionMismatch("one candidate set per task is required");
  if (tasks.size() > 3) throw DimensionMismatch("sequence oracle supports at most 3 tasks");
  TaskSolver solver(env);
  // targets pin the robot too, so a chain through the myopic goals costs
  // exactly the myopic total
  std::map<std::pair<std::string, std::string>, std::optional<std::pair<Cost, WorldState>>> leg_cache;
  auto leg = [&](const WorldState& from, const WorldState& to) {
    auto key = std::make_pair(state_key(from), state_key(to));
    if (const auto it = leg_cache.find(key); it != leg_cache.end()) return it->second;
    std::optional<std::pair<Cost, WorldState>> c;
    if (auto p = solver.plan_to_state(from, to, true)) c.emplace(p->cost, p->final_state);
    leg_cache.emplace(std::move(key), c);
    return c;
  };

  SequenceSolution best;
  best.total = kInfiniteCost;
  std::vector<WorldState> chosen;
  auto recurse = [&](auto&& self, std::size_t i, const WorldState& at, Cost so_far) -> void {
    if (so_far >= best.total) return;
    if (i == tasks.size()) {
      best.total = so_far;
      best.states = chosen;
      return;
    }
    for (const auto& g : candidates[i]) {
      if (!is_task_satisfied(env, g, tasks[i])) continue;
      const auto c = leg(at, g);
      if (!c) continue;
      chosen.push_back(c->second);
      self(self, i + 1, c->second, so_far + c->first);
      chosen.pop_back();
    }
  };
  recurse(recurse, 0, s0, 0.0);
  if (best.total == kInfiniteCost) throw UnsolvableTask("no candidate chain solves the sequence");
  return best;
}

}  // namespace antiplan::planner
