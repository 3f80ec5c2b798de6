#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "antiplan/common.hpp"
#include "antiplan/pddl/ground.hpp"

namespace antiplan::planner {

using pddl::FactId;

struct Plan {
  std::vector<int> actions;  // indices into GroundedProblem::actions
  Cost cost = 0.0;
  std::size_t expanded = 0;
};

/// Flat, search-friendly copy of a grounded action set.
class CompiledTask {
 public:
  explicit CompiledTask(const pddl::GroundedProblem& problem)
      : num_facts_(static_cast<int>(problem.facts.size())),
        words_((problem.facts.size() + 63) / 64),
        pre_of_(problem.facts.size()),
        bucket_(problem.facts.size()) {
    const auto n = problem.actions.size();
    cost_.reserve(n);
    pre_count_.reserve(n);
    std::vector<int> uses(problem.facts.size(), 0);
    for (const auto& a : problem.actions)
      for (FactId f : a.pre) ++uses[static_cast<std::size_t>(f)];
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = problem.actions[i];
      pre_begin_.push_back(static_cast<int>(pre_.size()));
      pre_.insert(pre_.end(), a.pre.begin(), a.pre.end());
      add_begin_.push_back(static_cast<int>(add_.size()));
      add_.insert(add_.end(), a.add.begin(), a.add.end());
      del_begin_.push_back(static_cast<int>(del_.size()));
      del_.insert(del_.end(), a.del.begin(), a.del.end());
      cost_.push_back(a.cost);
      pre_count_.push_back(static_cast<int>(a.pre.size()));
      for (FactId f : a.pre) pre_of_[static_cast<std::size_t>(f)].push_back(static_cast<int>(i));
      if (a.pre.empty()) {
        always_.push_back(static_cast<int>(i));
      } else {
        // trigger on the least shared precondition
        FactId best = a.pre.front();
        for (FactId f : a.pre)
          if (uses[static_cast<std::size_t>(f)] < uses[static_cast<std::size_t>(best)]) best = f;
        bucket_[static_cast<std::size_t>(best)].push_back(static_cast<int>(i));
      }
    }
    pre_begin_.push_back(static_cast<int>(pre_.size()));
    add_begin_.push_back(static_cast<int>(add_.size()));
    del_begin_.push_back(static_cast<int>(del_.size()));
  }

  int num_facts() const { return num_facts_; }
  int num_actions() const { return static_cast<int>(cost_.size()); }
  std::size_t words() const { return words_; }

  std::span<const FactId> pre(int a) const { return range(pre_, pre_begin_, a); }
  std::span<const FactId> add(int a) const { return range(add_, add_begin_, a); }
  std::span<const FactId> del(int a) const { return range(del_, del_begin_, a); }
  Cost cost(int a) const { return cost_[static_cast<std::size_t>(a)]; }
  int pre_count(int a) const { return pre_count_[static_cast<std::size_t>(a)]; }
  std::span<const int> achievers_triggered_by(FactId f) const { return pre_of_[static_cast<std::size_t>(f)]; }
  std::span<const int> bucket(FactId f) const { return bucket_[static_cast<std::size_t>(f)]; }
  std::span<const int> unconditional() const { return always_; }

 private:
  template <typename T>
  static std::span<const T> range(const std::vector<T>& data, const std::vector<int>& begin, int a) {
    const auto b = static_cast<std::size_t>(begin[static_cast<std::size_t>(a)]);
    const auto e = static_cast<std::size_t>(begin[static_cast<std::size_t>(a) + 1]);
    return std::span<const T>(data.data() + b, e - b);
  }

  int num_facts_;
  std::size_t words_;
  std::vector<FactId> pre_, add_, del_;
  std::vector<int> pre_begin_, add_begin_, del_begin_;
  std::vector<Cost> cost_;
  std::vector<int> pre_count_;
  std::vector<std::vector<int>> pre_of_;
  std::vector<std::vector<int>> bucket_;
  std::vector<int> always_;
};

/// Bitset view of a fact set.
class FactBits {
 public:
  static bool test(std::span<const std::uint64_t> bits, FactId f) {
    return (bits[static_cast<std::size_t>(f) >> 6] >> (static_cast<unsigned>(f) & 63U)) & 1U;
  }
  static void set(std::span<std::uint64_t> bits, FactId f) {
    bits[static_cast<std::size_t>(f) >> 6] |= std::uint64_t{1} << (static_cast<unsigned>(f) & 63U);
  }
  static void reset(std::span<std::uint64_t> bits, FactId f) {
    bits[static_cast<std::size_t>(f) >> 6] &= ~(std::uint64_t{1} << (static_cast<unsigned>(f) & 63U));
  }
  template <typename F>
  static void for_each(std::span<const std::uint64_t> bits, F&& f) {
    for (std::size_t w = 0; w < bits.size(); ++w) {
      std::uint64_t word = bits[w];
      while (word != 0) {
        const int b = std::countr_zero(word);
        f(static_cast<FactId>(w * 64 + static_cast<std::size_t>(b)));
        word &= word - 1;
      }
    }
  }
};

/// Reusable scratch memory for h_max evaluations.
class HmaxEvaluator {
 public:
  explicit HmaxEvaluator(const CompiledTask& task)
      : task_(&task),
        value_(static_cast<std::size_t>(task.num_facts())),
        counter_(static_cast<std::size_t>(task.num_actions())),
        goal_mark_(static_cast<std::size_t>(task.num_facts()), 0) {}

  /// Max-cost of achieving the goal facts under delete relaxation from the
  /// facts set in `bits`: h(f) = 0 on the state, otherwise
  /// h(f) = min over achievers a of cost(a) + max over pre(a) of h(p).
  Cost operator()(std::span<const std::uint64_t> bits, std::span<const FactId> goal) {
    const CompiledTask& t = *task_;
    std::fill(value_.begin(), value_.end(), kInfiniteCost);
    for (int a = 0; a < t.num_actions(); ++a) counter_[static_cast<std::size_t>(a)] = t.pre_count(a);
    heap_.clear();

    int goals_left = 0;
    for (FactId g : goal) {
      if (FactBits::test(bits, g)) continue;
      if (!goal_mark_[static_cast<std::size_t>(g)]) {
        goal_mark_[static_cast<std::size_t>(g)] = 1;
        ++goals_left;
      }
    }
    if (goals_left == 0) return 0.0;

    // the fixpoint does not depend on the pop order among equal costs
    auto later = [](const Item& x, const Item& y) { return x.cost > y.cost; };
    auto relax = [&](int a, Cost base) {
      const Cost v = base + t.cost(a);
      for (FactId p : t.add(a)) {
        if (v < value_[static_cast<std::size_t>(p)]) {
          value_[static_cast<std::size_t>(p)] = v;
          heap_.push_back({v, p});
          std::push_heap(heap_.begin(), heap_.end(), later);
        }
      }
    };

    // facts of the state settle at zero before anything else
    FactBits::for_each(bits, [&](FactId f) { value_[static_cast<std::size_t>(f)] = 0.0; });
    for (int a : t.unconditional()) relax(a, 0.0);
    FactBits::for_each(bits, [&](FactId f) {
      for (int a : t.achievers_triggered_by(f))
        if (--counter_[static_cast<std::size_t>(a)] == 0) relax(a, 0.0);
    });

    Cost result = kInfiniteCost;
    while (!heap_.empty()) {
      std::pop_heap(heap_.begin(), heap_.end(), later);
      const auto [c, f] = heap_.back();
      heap_.pop_back();
      if (c > value_[static_cast<std::size_t>(f)] || FactBits::test(bits, f)) continue;
      if (goal_mark_[static_cast<std::size_t>(f)]) {
        goal_mark_[static_cast<std::size_t>(f)] = 0;
        if (--goals_left == 0) {
          result = c;  // popped in nondecreasing order, so this is the max
          break;
        }
      }
      // facts pop in nondecreasing order: the last precondition to settle
      // carries the max
      for (int a : t.achievers_triggered_by(f))
        if (--counter_[static_cast<std::size_t>(a)] == 0) relax(a, c);
    }
    for (FactId g : goal) goal_mark_[static_cast<std::size_t>(g)] = 0;
    return result;
  }

 private:
  const CompiledTask* task_;
  std::vector<Cost> value_;
  std::vector<int> counter_;
  std::vector<char> goal_mark_;
  struct Item {
    Cost cost;
    FactId fact;
  };
  std::vector<Item> heap_;
};

inline std::vector<std::uint64_t> to_bits(const CompiledTask& task, std::span<const FactId> facts) {
  std::vector<std::uint64_t> bits(task.words(), 0);
  for (FactId f : facts) FactBits::set(bits, f);
  return bits;
}

/// h_max of `facts` towards the problem's goal.
inline Cost hmax(const pddl::GroundedProblem& problem, std::span<const FactId> facts) {
  CompiledTask task(problem);
  HmaxEvaluator h(task);
  const auto bits = to_bits(task, facts);
  return h(bits, problem.goal);
}

struct SearchOptions {
  bool use_heuristic = true;       // false gives uniform-cost search
  std::size_t max_expansions = 0;  // 0 = unbounded
  // Optional per-action blocker facts: an action is skipped in any state
  // where one of its blockers holds. Used for symmetry breaking; the
  // heuristic still relaxes the unpruned action set.
  const std::vector<std::vector<FactId>>* blockers = nullptr;
  // Optional action flags: a flagged action never directly follows another
  // flagged action. Sound when any two flagged steps are dominated by a
  // single flagged step, e.g. moves under a metric cost table.
  const std::vector<char>* no_chain = nullptr;
  // Optional admissible bound combined with h_max by taking the maximum.
  // It need not be consistent.
  std::function<Cost(std::span<const std::uint64_t>)> lower_bound;
};

/// A* over fact sets with h_max. Reopens closed nodes when a cheaper path is
/// found. Ties on f prefer lower h, then the lexicographically smaller action
/// sequence, so identical inputs give identical plans.
///
/// h_max is consistent, so a child is queued with the bound
/// max(0, h(parent) - cost) and its own h_max is computed the first time it
/// reaches the front of the queue. Expansion order is the same as with eager
/// evaluation; children that are never reached are never evaluated. An extra
/// lower bound only raises a node's own h; children inherit from h_max alone.
class AStar {
 public:
  explicit AStar(const CompiledTask& task) : task_(&task), hmax_(task) {}

  std::optional<Plan> solve(std::span<const FactId> init, std::span<const FactId> goal, SearchOptions opt = {}) {
    const CompiledTask& t = *task_;
    W_ = t.words();
    reset();
    std::vector<std::uint64_t> goal_bits = to_bits(t, goal);

    std::vector<std::uint64_t> start = to_bits(t, init);
    const int root = intern(start, 0.0, 0.0);
    push(root, 0.0, 0.0, -1);

    std::vector<std::uint64_t> succ(W_);
    std::size_t expanded = 0;
    while (!open_.empty()) {
      const Entry e = open_.top();
      open_.pop();
      Node& node = nodes_[static_cast<std::size_t>(e.node)];
      if (e.g > node.g || node.h == kInfiniteCost) continue;  // stale or dead end
      if (!node.evaluated) {
        node.evaluated = true;
        node.hc = opt.use_heuristic ? hmax_(state(e.node), goal) : 0.0;
        node.h = node.hc;
        if (node.h == kInfiniteCost) continue;
        if (opt.lower_bound) node.h = std::max(node.h, opt.lower_bound(state(e.node)));
        if (node.h > e.h) {
          push(e.node, e.g, node.h, e.path);
          continue;
        }
      } else if (node.h > e.h) {
        push(e.node, e.g, node.h, e.path);
        continue;
      }
      const auto bits = state(e.node);
      if (contains(bits, goal_bits)) {
        Plan plan;
        plan.cost = e.g;
        plan.expanded = expanded;
        for (int p = e.path; p != -1; p = paths_[static_cast<std::size_t>(p)].parent)
          plan.actions.push_back(paths_[static_cast<std::size_t>(p)].action);
        std::reverse(plan.actions.begin(), plan.actions.end());
        return plan;
      }
      ++expanded;
      if (opt.max_expansions != 0 && expanded > opt.max_expansions) return std::nullopt;

      const Cost g = e.g;
      const Cost h_parent = node.hc;
      const int path = e.path;
      const bool after_chain = opt.no_chain != nullptr && path != -1 &&
                               (*opt.no_chain)[static_cast<std::size_t>(paths_[static_cast<std::size_t>(path)].action)];
      auto try_action = [&](int a) {
        if (after_chain && (*opt.no_chain)[static_cast<std::size_t>(a)]) return;
        const auto cur = state(e.node);
        for (FactId p : t.pre(a))
          if (!FactBits::test(cur, p)) return;
        if (opt.blockers != nullptr)
          for (FactId b : (*opt.blockers)[static_cast<std::size_t>(a)])
            if (FactBits::test(cur, b)) return;
        std::copy(cur.begin(), cur.end(), succ.begin());
        for (FactId d : t.del(a)) FactBits::reset(succ, d);
        for (FactId p : t.add(a)) FactBits::set(succ, p);
        const Cost g2 = g + t.cost(a);
        const Cost bound = std::max(0.0, h_parent - t.cost(a));
        const int found = lookup(succ);
        if (found < 0) {
          const int id = intern(succ, g2, bound);
          push(id, g2, bound, extend(path, a));
        } else {
          Node& n = nodes_[static_cast<std::size_t>(found)];
          if (g2 < n.g && n.h != kInfiniteCost) {
            n.g = g2;
            push(found, g2, n.evaluated ? n.h : std::max(n.h, bound), extend(path, a));
          }
        }
      };
      // collect candidate actions from buckets of true facts, in action order
      candidates_.clear();
      FactBits::for_each(bits, [&](FactId f) {
        const auto b = t.bucket(f);
        candidates_.insert(candidates_.end(), b.begin(), b.end());
      });
      const auto always = t.unconditional();
      candidates_.insert(candidates_.end(), always.begin(), always.end());
      std::sort(candidates_.begin(), candidates_.end());
      for (int a : candidates_) try_action(a);
    }
    return std::nullopt;
  }

 private:
  struct Node {
    Cost g;
    Cost h;       // lower bound until evaluated
    Cost hc = 0;  // the h_max part, which children may inherit
    bool evaluated = false;
  };
  struct PathNode {
    int action;
    int parent;
  };
  struct Entry {
    Cost f;
    Cost h;
    Cost g;
    int node;
    int path;
  };
  struct Worse {
    const AStar* self;
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.f != b.f) return a.f > b.f;
      if (a.h != b.h) return a.h > b.h;
      return self->path_less(b.path, a.path);
    }
  };

  void reset() {
    nodes_.clear();
    arena_.clear();
    paths_.clear();
    open_ = std::priority_queue<Entry, std::vector<Entry>, Worse>(Worse{this});
    table_.assign(1024, -1);
  }

  std::span<const std::uint64_t> state(int id) const {
    return std::span<const std::uint64_t>(arena_.data() + static_cast<std::size_t>(id) * W_, W_);
  }

  static bool contains(std::span<const std::uint64_t> s, std::span<const std::uint64_t> sub) {
    for (std::size_t w = 0; w < s.size(); ++w)
      if ((s[w] & sub[w]) != sub[w]) return false;
    return true;
  }

  std::size_t hash(std::span<const std::uint64_t> s) const {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (auto w : s) h = splitmix64(h ^ w);
    return static_cast<std::size_t>(h);
  }

  int lookup(std::span<const std::uint64_t> s) const {
    const std::size_t mask = table_.size() - 1;
    for (std::size_t i = hash(s) & mask;; i = (i + 1) & mask) {
      const int id = table_[i];
      if (id < 0) return -1;
      if (std::equal(s.begin(), s.end(), state(id).begin())) return id;
    }
  }

  int intern(std::span<const std::uint64_t> s, Cost g, Cost h) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({g, h, 0.0, false});
    arena_.insert(arena_.end(), s.begin(), s.end());
    if (nodes_.size() * 2 > table_.size()) {
      table_.assign(table_.size() * 2, -1);
      for (int i = 0; i < id; ++i) insert_index(i);
    }
    insert_index(id);
    return id;
  }

  void insert_index(int id) {
    const std::size_t mask = table_.size() - 1;
    std::size_t i = hash(state(id)) & mask;
    while (table_[i] >= 0) i = (i + 1) & mask;
    table_[i] = id;
  }

  int extend(int parent, int action) {
    paths_.push_back({action, parent});
    return static_cast<int>(paths_.size()) - 1;
  }

  void push(int node, Cost g, Cost h, int path) { open_.push({g + h, h, g, node, path}); }

  // Lexicographic comparison of the action sequences behind two path ids.
  bool path_less(int a, int b) const {
    if (a == b) return false;
    seq_a_.clear();
    seq_b_.clear();
    for (int p = a; p != -1; p = paths_[static_cast<std::size_t>(p)].parent) seq_a_.push_back(paths_[static_cast<std::size_t>(p)].action);
    for (int p = b; p != -1; p = paths_[static_cast<std::size_t>(p)].parent) seq_b_.push_back(paths_[static_cast<std::size_t>(p)].action);
    return std::lexicographical_compare(seq_a_.rbegin(), seq_a_.rend(), seq_b_.rbegin(), seq_b_.rend());
  }

  const CompiledTask* task_;
  HmaxEvaluator hmax_;
  std::size_t W_ = 1;
  std::vector<Node> nodes_;
  std::vector<std::uint64_t> arena_;
  std::vector<PathNode> paths_;
  std::vector<int> table_;
  std::vector<int> candidates_;
  std::priority_queue<Entry, std::vector<Entry>, Worse> open_{Worse{this}};
  mutable std::vector<int> seq_a_, seq_b_;
};

/// Optimal plan for the problem's goal, or nullopt if none exists.
inline std::optional<Plan> plan(const pddl::GroundedProblem& problem, SearchOptions opt = {}) {
  CompiledTask task(problem);
  AStar search(task);
  return search.solve(problem.init, problem.goal, opt);
}

}  // namespace antiplan::planner
