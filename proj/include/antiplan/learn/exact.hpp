#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <vector>

#include "antiplan/blockworld.hpp"
#include "antiplan/planner/task_solver.hpp"

namespace antiplan::learn {

/// Expected optimal cost of one follow-up task drawn from the environment's
/// distribution. A task with no plan from the evaluated state contributes a
/// penalty of ten times the largest optimal task cost from the initial state.
class ExactOracle {
 public:
  explicit ExactOracle(const Environment& env) : env_(&env), solver_(env) {}

  const Environment& environment() const { return *env_; }
  planner::TaskSolver& solver() { return solver_; }

  Cost operator()(const WorldState& s) { return *evaluate(s, kInfiniteCost); }

  /// The cost when it does not exceed `limit`, nullopt as soon as the
  /// expectation provably does. Exact whenever a value is returned.
  std::optional<Cost> evaluate(const WorldState& s, Cost limit) {
    const auto& entries = env_->task_distribution.entries;
    const Cost cut = limit + 1e-6 * (1.0 + std::abs(limit));  // slack for summation order
    std::vector<Cost> value(entries.size());
    std::vector<char> exact(entries.size());
    Cost total = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& task = entries[i].task;
      exact[i] = solver_.is_cached(s, task);
      value[i] = exact[i] ? term(s, task) : solver_.task_cost_bound(s, task);
      if (!exact[i] && value[i] == kInfiniteCost) {
        value[i] = term(s, task);
        exact[i] = 1;
      }
      total += entries[i].probability * value[i];
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (total > cut) return std::nullopt;
      if (exact[i]) continue;
      const Cost c = term(s, entries[i].task);
      total += entries[i].probability * (c - value[i]);
      value[i] = c;
    }
    if (total > cut) return std::nullopt;
    // re-sum in distribution order so the value does not depend on the cache
    Cost sum = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) sum += entries[i].probability * value[i];
    return sum;
  }

  Cost penalty() {
    if (!penalty_) {
      Cost worst = 0.0;
      for (const auto& e : env_->task_distribution.entries)
        if (const auto c = solver_.task_cost(env_->initial_state, e.task)) worst = std::max(worst, *c);
      penalty_ = 10.0 * worst;
    }
    return *penalty_;
  }

  std::size_t penalties_used() const { return penalties_used_; }

 private:
  Cost term(const WorldState& s, const TaskSpec& task) {
    if (const auto c = solver_.task_cost(s, task)) return *c;
    ++penalties_used_;
    if (verbose_penalty_) std::fprintf(stderr, "antiplan: task %s unsolvable, penalty applied\n", format_task(*env_, task).c_str());
    return penalty();
  }

  const Environment* env_;
  planner::TaskSolver solver_;
  std::optional<Cost> penalty_;
  std::size_t penalties_used_ = 0;
  bool verbose_penalty_ = true;
};

inline Cost exact_anticipatory_cost(const Environment& env, const WorldState& s) {
  ExactOracle oracle(env);
  return oracle(s);
}

}  // namespace antiplan::learn
