#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "antiplan/common.hpp"
#include "antiplan/pddl/problem.hpp"

namespace antiplan::pddl {

using FactId = int;

struct GroundAction {
  std::string name;
  std::vector<std::string> args;
  std::vector<FactId> pre;  // sorted
  std::vector<FactId> add;  // sorted, disjoint from del
  std::vector<FactId> del;  // sorted
  Cost cost = 0.0;
};

inline std::string to_string(const GroundAction& a) {
  std::string s = "(" + a.name;
  for (const auto& x : a.args) s += " " + x;
  return s + ")";
}

/// Fluent atoms indexed 0..n-1 in canonical (sorted) order; static atoms are
/// compiled away.
struct GroundedProblem {
  std::vector<GroundAtom> facts;
  std::vector<GroundAction> actions;
  std::vector<FactId> init;  // sorted
  std::vector<FactId> goal;  // sorted

  std::optional<FactId> fact_index(const GroundAtom& atom) const {
    const auto it = std::lower_bound(facts.begin(), facts.end(), atom);
    if (it == facts.end() || !(*it == atom)) return std::nullopt;
    return static_cast<FactId>(it - facts.begin());
  }
};

namespace detail {

struct Grounder {
  const PddlDomain& domain;
  const ProblemInstance& problem;

  std::unordered_map<std::string, int> object_ids;
  std::vector<std::string> object_names;
  std::unordered_map<std::string, int> predicate_ids;
  std::vector<std::string> predicate_names;
  std::vector<char> predicate_is_static;

  // Reachable atoms per predicate; each tuple is a list of object ids.
  std::vector<std::set<std::vector<int>>> reached;
  std::vector<std::vector<std::vector<int>>> reached_list;

  Grounder(const PddlDomain& d, const ProblemInstance& p) : domain(d), problem(p) {}

  int object_id(const std::string& name) {
    auto [it, fresh] = object_ids.emplace(name, static_cast<int>(object_names.size()));
    if (fresh) object_names.push_back(name);
    return it->second;
  }

  int predicate_id(const std::string& name) {
    auto [it, fresh] = predicate_ids.emplace(name, static_cast<int>(predicate_names.size()));
    if (fresh) {
      predicate_names.push_back(name);
      reached.emplace_back();
      reached_list.emplace_back();
    }
    return it->second;
  }

  bool add_reached(int pred, std::vector<int> tuple) {
    if (!reached[static_cast<std::size_t>(pred)].insert(tuple).second) return false;
    reached_list[static_cast<std::size_t>(pred)].push_back(std::move(tuple));
    return true;
  }

  struct CompiledAtom {
    int predicate;
    std::vector<int> args;  // >= 0: object id; < 0: -(parameter index) - 1
  };

  struct CompiledSchema {
    const ActionSchema* schema;
    std::vector<CompiledAtom> pre, add, del;
  };

  CompiledAtom compile(const Atom& atom, const ActionSchema& s) {
    CompiledAtom c{predicate_id(atom.predicate), {}};
    for (const auto& arg : atom.args) {
      if (is_variable(arg)) {
        const auto it = std::find(s.parameters.begin(), s.parameters.end(), arg);
        c.args.push_back(-static_cast<int>(it - s.parameters.begin()) - 1);
      } else {
        c.args.push_back(object_id(arg));
      }
    }
    return c;
  }

  static std::vector<int> bind(const CompiledAtom& a, const std::vector<int>& binding) {
    std::vector<int> t(a.args.size());
    for (std::size_t i = 0; i < a.args.size(); ++i) t[i] = a.args[i] >= 0 ? a.args[i] : binding[static_cast<std::size_t>(-a.args[i] - 1)];
    return t;
  }

  // Enumerates bindings satisfying all preconditions against reached atoms.
  template <typename Visit>
  void enumerate(const CompiledSchema& cs, std::size_t k, std::vector<int>& binding, Visit&& visit) {
    if (k == cs.pre.size()) {
      // parameters not constrained by any precondition range over all objects
      for (std::size_t p = 0; p < binding.size(); ++p) {
        if (binding[p] != -1) continue;
        for (int o = 0; o < static_cast<int>(object_names.size()); ++o) {
          binding[p] = o;
          enumerate(cs, k, binding, visit);
        }
        binding[p] = -1;
        return;
      }
      visit(binding);
      return;
    }
    const CompiledAtom& atom = cs.pre[k];
    // copy: reached_list may grow while visiting
    const std::size_t n = reached_list[static_cast<std::size_t>(atom.predicate)].size();
    for (std::size_t t = 0; t < n; ++t) {
      const std::vector<int> tuple = reached_list[static_cast<std::size_t>(atom.predicate)][t];
      if (tuple.size() != atom.args.size()) continue;
      std::vector<std::size_t> newly_bound;
      bool ok = true;
      for (std::size_t i = 0; i < tuple.size() && ok; ++i) {
        const int a = atom.args[i];
        if (a >= 0) {
          ok = a == tuple[i];
        } else {
          int& slot = binding[static_cast<std::size_t>(-a - 1)];
          if (slot == -1) {
            slot = tuple[i];
            newly_bound.push_back(static_cast<std::size_t>(-a - 1));
          } else {
            ok = slot == tuple[i];
          }
        }
      }
      if (ok) enumerate(cs, k + 1, binding, visit);
      for (auto p : newly_bound) binding[p] = -1;
    }
  }

  GroundedProblem run() {
    for (const auto& o : problem.objects) object_id(o);

    std::vector<CompiledSchema> schemas;
    for (const auto& s : domain.actions) {
      CompiledSchema cs{&s, {}, {}, {}};
      for (const auto& a : s.precondition) cs.pre.push_back(compile(a, s));
      for (const auto& a : s.add_effects) cs.add.push_back(compile(a, s));
      for (const auto& a : s.del_effects) cs.del.push_back(compile(a, s));
      schemas.push_back(std::move(cs));
    }
    predicate_is_static.assign(predicate_names.size(), 1);
    for (const auto& cs : schemas) {
      for (const auto& a : cs.add) predicate_is_static[static_cast<std::size_t>(a.predicate)] = 0;
      for (const auto& a : cs.del) predicate_is_static[static_cast<std::size_t>(a.predicate)] = 0;
    }

    std::set<std::vector<int>> init_atoms;  // (predicate, args...)
    auto encode = [&](const GroundAtom& ga) {
      std::vector<int> key{predicate_id(ga.predicate)};
      for (const auto& a : ga.args) key.push_back(object_id(a));
      return key;
    };
    for (const auto& ga : problem.init) {
      auto key = encode(ga);
      init_atoms.insert(key);
      add_reached(key[0], std::vector<int>(key.begin() + 1, key.end()));
    }
    predicate_is_static.resize(predicate_names.size(), 1);

    // Relaxed reachability fixpoint.
    std::set<std::pair<std::size_t, std::vector<int>>> instances;
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t si = 0; si < schemas.size(); ++si) {
        const auto& cs = schemas[si];
        std::vector<int> binding(cs.schema->parameters.size(), -1);
        std::vector<std::vector<int>> found;
        enumerate(cs, 0, binding, [&](const std::vector<int>& b) { found.push_back(b); });
        for (auto& b : found) {
          if (!instances.emplace(si, b).second) continue;
          for (const auto& a : cs.add) changed |= add_reached(a.predicate, bind(a, b));
        }
      }
    }

    auto atom_of = [&](int pred, const std::vector<int>& tuple) {
      GroundAtom ga{predicate_names[static_cast<std::size_t>(pred)], {}};
      for (int o : tuple) ga.args.push_back(object_names[static_cast<std::size_t>(o)]);
      return ga;
    };
    auto is_static = [&](int pred) {
      return static_cast<std::size_t>(pred) >= predicate_is_static.size() || predicate_is_static[static_cast<std::size_t>(pred)];
    };

    GroundedProblem out;
    std::set<GroundAtom> universe;
    for (std::size_t p = 0; p < reached_list.size(); ++p) {
      if (is_static(static_cast<int>(p))) continue;
      for (const auto& t : reached_list[p]) universe.insert(atom_of(static_cast<int>(p), t));
    }
    std::vector<GroundAtom> goal_atoms;
    for (const auto& ga : problem.goal) {
      const auto key = encode(ga);
      if (is_static(key[0]) && init_atoms.count(key)) continue;  // statically true
      universe.insert(ga);  // unreachable goal atoms stay as facts no action adds
      goal_atoms.push_back(ga);
    }
    out.facts.assign(universe.begin(), universe.end());
    auto index_of = [&](const GroundAtom& ga) { return *out.fact_index(ga); };

    auto sorted_unique = [](std::vector<FactId>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };

    for (const auto& [si, b] : instances) {
      const auto& cs = schemas[si];
      GroundAction ga;
      ga.name = cs.schema->name;
      for (int o : b) ga.args.push_back(object_names[static_cast<std::size_t>(o)]);
      for (const auto& a : cs.pre)
        if (!is_static(a.predicate)) ga.pre.push_back(index_of(atom_of(a.predicate, bind(a, b))));
      for (const auto& a : cs.add) ga.add.push_back(index_of(atom_of(a.predicate, bind(a, b))));
      for (const auto& a : cs.del) {
        if (const auto id = out.fact_index(atom_of(a.predicate, bind(a, b)))) ga.del.push_back(*id);
      }
      sorted_unique(ga.pre);
      sorted_unique(ga.add);
      sorted_unique(ga.del);
      std::vector<FactId> net_del;
      std::set_difference(ga.del.begin(), ga.del.end(), ga.add.begin(), ga.add.end(), std::back_inserter(net_del));
      ga.del = std::move(net_del);
      if (ga.del.empty() && std::includes(ga.pre.begin(), ga.pre.end(), ga.add.begin(), ga.add.end())) continue;  // no-op

      const CostExpr& c = cs.schema->cost;
      if (c.kind == CostExpr::Kind::constant) {
        ga.cost = c.value;
      } else {
        GroundAtom term{c.function, {}};
        for (const auto& arg : c.args) {
          if (is_variable(arg)) {
            const auto it = std::find(cs.schema->parameters.begin(), cs.schema->parameters.end(), arg);
            term.args.push_back(object_names[static_cast<std::size_t>(b[static_cast<std::size_t>(it - cs.schema->parameters.begin())])]);
          } else {
            term.args.push_back(arg);
          }
        }
        const auto it = problem.function_values.find(term);
        if (it == problem.function_values.end()) throw MissingMoveCost("no value for " + to_string(term));
        if (!(it->second >= 0.0) || !std::isfinite(it->second))
          throw MissingMoveCost("invalid value for " + to_string(term));
        ga.cost = it->second;
      }
      out.actions.push_back(std::move(ga));
    }
    std::sort(out.actions.begin(), out.actions.end(), [](const GroundAction& x, const GroundAction& y) {
      return std::tie(x.name, x.args) < std::tie(y.name, y.args);
    });

    for (const auto& key : init_atoms) {
      if (is_static(key[0])) continue;
      out.init.push_back(index_of(atom_of(key[0], std::vector<int>(key.begin() + 1, key.end()))));
    }
    for (const auto& ga : goal_atoms) out.goal.push_back(index_of(ga));
    sorted_unique(out.init);
    sorted_unique(out.goal);
    return out;
  }
};

}  // namespace detail

/// Grounds the domain against a problem instance by relaxed reachability:
/// only action instances whose preconditions are jointly reachable from the
/// initial atoms are produced.
inline GroundedProblem ground(const PddlDomain& domain, const ProblemInstance& problem) {
  detail::Grounder g(domain, problem);
  return g.run();
}

}  // namespace antiplan::pddl
