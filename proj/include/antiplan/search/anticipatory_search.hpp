#pragma once

#include <algorithm>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "antiplan/blockworld.hpp"
#include "antiplan/learn/exact.hpp"
#include "antiplan/learn/train.hpp"
#include "antiplan/planner/task_solver.hpp"

namespace antiplan::search {

/// Future-cost estimate of a state. `bounded` may give up (nullopt) once the
/// value is known to exceed a limit; without it the plain value is used.
struct Estimator {
  std::function<Cost(const WorldState&)> value;
  std::function<std::optional<Cost>(const WorldState&, Cost)> bounded;

  Cost operator()(const WorldState& s) const { return value(s); }
  std::optional<Cost> within(const WorldState& s, Cost limit) const {
    if (bounded) return bounded(s, limit);
    return value(s);
  }
};

inline Estimator constant_estimator(Cost c) {
  return {[c](const WorldState&) { return c; }, {}};
}

/// The oracle must outlive the estimator.
inline Estimator exact_estimator(learn::ExactOracle& oracle) {
  return {[&oracle](const WorldState& s) { return oracle(s); },
          [&oracle](const WorldState& s, Cost limit) { return oracle.evaluate(s, limit); }};
}

/// Model and environment must outlive the estimator.
inline Estimator learned_estimator(const learn::GnnModel& model, const Environment& env) {
  return {[&model, &env](const WorldState& s) { return learn::estimate(model, env, s); }, {}};
}

/// Objects picked at least once, in index order.
inline std::vector<int> manipulated_objects(const planner::WorldPlan& plan) {
  std::set<int> objs;
  for (const auto& a : plan.actions)
    if (a.kind == WorldAction::Kind::pick) objs.insert(a.object);
  return {objs.begin(), objs.end()};
}

namespace detail {

struct Candidate {
  WorldState state;
  int changed = 0;          // manipulated objects off their myopic slot
  int region_changes = 0;   // ... and off their myopic region
  double displacement = 0;  // summed slot distance from the myopic goal
  std::size_t order = 0;
};

}  // namespace detail

/// Goal states that reassign the objects the plan manipulates to other free
/// slots, keeping the task satisfied. The plan's own goal comes first; the
/// rest are ordered by how many objects move, how many change region, then
/// summed displacement. The robot ends at the region of the last object the
/// plan places; with vary_robot each placement is repeated with the robot
/// beside each other manipulated object.
inline std::vector<WorldState> alternate_goal_states(const Environment& env, const WorldState& s0, const TaskSpec& task,
                                                     const planner::WorldPlan& plan, std::size_t max_candidates = 64,
                                                     bool vary_robot = true) {
  const WorldState& base = plan.final_state;
  std::vector<WorldState> out{base};
  if (max_candidates <= 1) return out;
  const auto objs = manipulated_objects(plan);
  if (objs.empty()) return out;
  int last = kNone;
  for (const auto& a : plan.actions)
    if (a.kind == WorldAction::Kind::place) last = a.object;
  (void)s0;

  std::vector<char> taken(static_cast<std::size_t>(env.num_slots()), 0);
  for (int o = 0; o < env.num_objects(); ++o)
    if (std::find(objs.begin(), objs.end(), o) == objs.end()) taken[static_cast<std::size_t>(base.placements[static_cast<std::size_t>(o)])] = 1;
  std::vector<int> free;
  for (int sl = 0; sl < env.num_slots(); ++sl)
    if (!taken[static_cast<std::size_t>(sl)]) free.push_back(sl);

  // enumerate by number of moved objects; stop after the level that fills the cap
  std::vector<detail::Candidate> chosen;
  std::size_t order = 0;
  const std::size_t m = objs.size();
  for (std::size_t level = 1; level <= m && chosen.size() + 1 < max_candidates; ++level) {
    std::vector<detail::Candidate> found;
    // subsets of manipulated objects of this size, lexicographic
    std::vector<int> idx(level);
    for (std::size_t i = 0; i < level; ++i) idx[i] = static_cast<int>(i);
    for (;;) {
      WorldState s = base;
      std::vector<char> used = taken;
      for (std::size_t k = 0; k < m; ++k)
        if (std::find(idx.begin(), idx.end(), static_cast<int>(k)) == idx.end())
          used[static_cast<std::size_t>(base.placements[static_cast<std::size_t>(objs[k])])] = 1;
      auto assign = [&](auto&& self, std::size_t i) -> void {
        if (i == level) {
          if (!is_task_satisfied(env, s, task)) return;
          detail::Candidate c;
          c.state = s;
          c.changed = static_cast<int>(level);
          for (int k : idx) {
            const int o = objs[static_cast<std::size_t>(k)];
            const int a = s.placements[static_cast<std::size_t>(o)];
            const int b = base.placements[static_cast<std::size_t>(o)];
            c.region_changes += env.region_of_slot(a) != env.region_of_slot(b);
            c.displacement += distance(env.slots[static_cast<std::size_t>(a)].position, env.slots[static_cast<std::size_t>(b)].position);
          }
          if (last != kNone) c.state.robot_at = env.region_of_slot(s.placements[static_cast<std::size_t>(last)]);
          c.order = order++;
          found.push_back(std::move(c));
          return;
        }
        const int o = objs[static_cast<std::size_t>(idx[i])];
        const int home = base.placements[static_cast<std::size_t>(o)];
        for (int sl : free) {
          if (sl == home || used[static_cast<std::size_t>(sl)]) continue;
          used[static_cast<std::size_t>(sl)] = 1;
          s.placements[static_cast<std::size_t>(o)] = sl;
          self(self, i + 1);
          used[static_cast<std::size_t>(sl)] = 0;
        }
        s.placements[static_cast<std::size_t>(o)] = home;
      };
      assign(assign, 0);
      // next subset
      int i = static_cast<int>(level) - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == static_cast<int>(m - level) + i) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (std::size_t j = static_cast<std::size_t>(i) + 1; j < level; ++j) idx[j] = idx[j - 1] + 1;
    }
    std::stable_sort(found.begin(), found.end(), [](const detail::Candidate& a, const detail::Candidate& b) {
      if (a.region_changes != b.region_changes) return a.region_changes < b.region_changes;
      if (a.displacement != b.displacement) return a.displacement < b.displacement;
      return a.order < b.order;
    });
    for (auto& c : found) {
      if (chosen.size() + 1 >= max_candidates) break;
      chosen.push_back(std::move(c));
    }
  }
  for (auto& c : chosen) out.push_back(std::move(c.state));
  if (!vary_robot) return out;

  // the same placements with the robot finishing beside another manipulated object
  std::vector<WorldState> with_robot;
  for (const auto& st : out) {
    std::vector<int> ends{st.robot_at};
    for (int o : objs) {
      const int g = env.region_of_slot(st.placements[static_cast<std::size_t>(o)]);
      if (std::find(ends.begin(), ends.end(), g) == ends.end()) ends.push_back(g);
    }
    for (int g : ends) {
      if (with_robot.size() >= max_candidates) break;
      WorldState v = st;
      v.robot_at = g;
      with_robot.push_back(std::move(v));
    }
  }
  return with_robot;
}

struct SearchResult {
  WorldState goal;
  planner::WorldPlan plan;
  Cost immediate = 0.0;
  Cost future = 0.0;
  Cost total = 0.0;
  Cost myopic_total = 0.0;  // plan-for-the-task goal under the same estimator
  std::size_t candidates_evaluated = 0;
  bool myopic = true;  // the myopic goal was kept
};

/// Goal state for `task` minimizing immediate cost plus estimated future
/// cost over the alternate goal states. Ties keep the myopic goal, then the
/// earlier candidate. A candidate is reached by the cheapest plan that puts
/// each object into the candidate's region for it; the reported goal is
/// where that plan ends.
inline SearchResult anticipatory_plan(planner::TaskSolver& solver, const WorldState& s0, const TaskSpec& task, const Estimator& est,
                                      std::size_t max_candidates = 64) {
  const Environment& env = solver.environment();
  auto myopic = solver.plan_task(s0, task);
  if (!myopic) throw UnsolvableTask("task " + format_task(env, task) + " has no plan");
  const auto candidates = alternate_goal_states(env, s0, task, *myopic, max_candidates);

  SearchResult best;
  best.goal = myopic->final_state;
  best.immediate = myopic->cost;
  best.future = est(best.goal);
  best.total = best.immediate + best.future;
  best.myopic_total = best.total;
  best.plan = std::move(*myopic);
  const Cost lower = best.immediate;  // no goal of the task is cheaper to reach

  // Costs are attached to regions, so candidates that agree on every
  // object's region and the robot location are interchangeable.
  std::set<std::string> seen{region_key(env, candidates.front())};
  std::size_t evaluated = 1;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!seen.insert(region_key(env, c)).second) continue;
    ++evaluated;
    const auto future = est.within(c, best.total - lower);
    if (!future || lower + *future >= best.total) continue;
    auto p = solver.plan_to_region_state(s0, c);
    if (!p || p->cost + *future >= best.total) continue;
    const Cost f = est(p->final_state);
    if (p->cost + f >= best.total) continue;
    best.goal = p->final_state;
    best.immediate = p->cost;
    best.future = f;
    best.total = p->cost + f;
    best.plan = std::move(*p);
    best.myopic = false;
  }
  best.candidates_evaluated = evaluated;
  return best;
}

struct PrepareResult {
  WorldState state;
  Cost value = 0.0;        // estimator value of state
  Cost action_cost = 0.0;  // cost of the actions leading there, not charged by default
  int adopted = 0;
  int skipped = 0;  // sampled tasks without a plan
};

/// Task-free hill climb on the estimator. Each iteration samples a task,
/// plans it myopically from the current state and moves to the best
/// hand-empty state along the way when that is strictly better.
inline PrepareResult prepare(planner::TaskSolver& solver, const WorldState& s0, const Estimator& est, int iterations, Rng& rng) {
  if (iterations < 1) throw DimensionMismatch("prepare needs at least one iteration");
  const Environment& env = solver.environment();
  PrepareResult r;
  r.state = s0;
  r.value = est(s0);
  for (int it = 0; it < iterations; ++it) {
    const TaskSpec task = sample_task(env.task_distribution, rng);
    const auto p = solver.plan_task(r.state, task);
    if (!p) {
      ++r.skipped;
      std::fprintf(stderr, "antiplan: prepare skipped unsolvable task %s\n", format_task(env, task).c_str());
      continue;
    }
    WorldState s = r.state;
    Cost spent = 0.0;
    std::optional<WorldState> best;
    Cost best_value = r.value;
    Cost best_spent = 0.0;
    for (const auto& a : p->actions) {
      s = apply_action(env, s, a);
      spent += action_cost(env, a);
      if (s.holding != kNone) continue;
      const auto v = est.within(s, best_value);
      if (v && *v < best_value) {
        best = s;
        best_value = *v;
        best_spent = spent;
      }
    }
    if (best) {
      r.state = std::move(*best);
      r.value = best_value;
      r.action_cost += best_spent;
      ++r.adopted;
    }
  }
  return r;
}

}  // namespace antiplan::search
