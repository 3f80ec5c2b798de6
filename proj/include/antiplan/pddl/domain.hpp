#pragma once

#include <charconv>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "antiplan/pddl/sexpr.hpp"

namespace antiplan::pddl {

/// Predicate application; arguments are variables ("?x") or constants.
struct Atom {
  std::string predicate;
  std::vector<std::string> args;
  SourceLocation loc;
};

inline bool is_variable(std::string_view s) { return !s.empty() && s.front() == '?'; }

/// Right-hand side of (increase (total-cost) ...): a number or a function
/// term such as (move-cost ?from ?to) whose value comes from the problem.
struct CostExpr {
  enum class Kind { constant, function };
  Kind kind = Kind::constant;
  double value = 0.0;
  std::string function;
  std::vector<std::string> args;
};

struct ActionSchema {
  std::string name;
  std::vector<std::string> parameters;
  std::vector<Atom> precondition;  // conjunction of positive literals
  std::vector<Atom> add_effects;
  std::vector<Atom> del_effects;
  CostExpr cost;
  SourceLocation loc;
};

struct Signature {
  std::string name;
  int arity = 0;
};

struct PddlDomain {
  std::string name;
  std::vector<std::string> requirements;
  std::vector<Signature> predicates;
  std::vector<Signature> functions;
  std::vector<ActionSchema> actions;

  const ActionSchema* find_action(std::string_view n) const {
    for (const auto& a : actions)
      if (a.name == n) return &a;
    return nullptr;
  }
};

namespace detail {

inline bool parse_number(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline const SExpr& expect_list(const SExpr& e, const char* what) {
  if (!e.is_list) throw SyntaxError(std::string("expected ") + what, e.loc);
  return e;
}

inline const std::string& expect_atom(const SExpr& e, const char* what) {
  if (!e.is_atom()) throw SyntaxError(std::string("expected ") + what, e.loc);
  return e.atom;
}

inline constexpr std::string_view kUnsupportedConnectives[] = {"or", "not", "forall", "exists", "imply", "when", "="};

inline void reject_connective(const SExpr& e) {
  const auto h = head(e);
  for (auto c : kUnsupportedConnectives)
    if (iequals(h, c)) throw UnsupportedFeature(std::string(c), e.loc);
}

inline Atom parse_atom(const SExpr& e) {
  expect_list(e, "atom");
  if (e.items.empty()) throw SyntaxError("empty atom", e.loc);
  Atom atom;
  atom.loc = e.loc;
  atom.predicate = expect_atom(e.items[0], "predicate name");
  for (std::size_t i = 1; i < e.size(); ++i) atom.args.push_back(expect_atom(e.items[i], "argument"));
  return atom;
}

/// A conjunction "(and l1 l2 ...)" or a single literal. Positive literals go
/// to `positive`; "(not ...)" is only allowed when `negative` is provided.
inline void parse_conjunction(const SExpr& e, std::vector<Atom>& positive, std::vector<Atom>* negative,
                              std::vector<const SExpr*>* other) {
  expect_list(e, "condition");
  if (e.items.empty()) return;  // "()" is the empty conjunction
  if (iequals(head(e), "and")) {
    for (std::size_t i = 1; i < e.size(); ++i) parse_conjunction(e.items[i], positive, negative, other);
    return;
  }
  const auto h = head(e);
  if (negative != nullptr && iequals(h, "not")) {
    if (e.size() != 2) throw SyntaxError("'not' takes one argument", e.loc);
    const SExpr& inner = expect_list(e.items[1], "atom under 'not'");
    reject_connective(inner);
    negative->push_back(parse_atom(inner));
    return;
  }
  if (other != nullptr) {
    for (auto op : {"increase", "decrease", "assign", "scale-up", "scale-down"})
      if (iequals(h, op)) {
        other->push_back(&e);
        return;
      }
  }
  reject_connective(e);
  positive.push_back(parse_atom(e));
}

inline CostExpr parse_cost(const SExpr& e) {
  if (!iequals(head(e), "increase")) throw UnsupportedFeature(std::string(head(e)), e.loc);
  if (e.size() != 3) throw SyntaxError("'increase' takes two arguments", e.loc);
  const SExpr& target = e.items[1];
  if (!target.is_list || target.size() != 1 || !is_keyword(target.items[0], "total-cost"))
    throw UnsupportedFeature("numeric fluent other than total-cost", target.loc);
  const SExpr& amount = e.items[2];
  CostExpr cost;
  if (amount.is_atom()) {
    if (!parse_number(amount.atom, cost.value)) throw SyntaxError("expected a number or function term", amount.loc);
    if (!(cost.value >= 0.0) || !std::isfinite(cost.value))
      throw SemanticError("action cost must be finite and non-negative", amount.loc);
    cost.kind = CostExpr::Kind::constant;
    return cost;
  }
  if (amount.items.empty()) throw SyntaxError("empty function term", amount.loc);
  cost.kind = CostExpr::Kind::function;
  cost.function = expect_atom(amount.items[0], "function name");
  for (std::size_t i = 1; i < amount.size(); ++i) cost.args.push_back(expect_atom(amount.items[i], "argument"));
  return cost;
}

inline Signature parse_signature(const SExpr& e) {
  expect_list(e, "declaration");
  if (e.items.empty()) throw SyntaxError("empty declaration", e.loc);
  Signature sig{expect_atom(e.items[0], "name"), 0};
  for (std::size_t i = 1; i < e.size(); ++i) {
    const auto& a = expect_atom(e.items[i], "parameter");
    if (a == "-") throw UnsupportedFeature("typing", e.items[i].loc);
    ++sig.arity;
  }
  return sig;
}

inline ActionSchema parse_action(const SExpr& e) {
  if (e.size() < 2) throw SyntaxError("action needs a name", e.loc);
  ActionSchema action;
  action.loc = e.loc;
  action.name = expect_atom(e.items[1], "action name");
  bool have_cost = false;
  for (std::size_t i = 2; i < e.size(); i += 2) {
    const SExpr& key = e.items[i];
    if (i + 1 >= e.size()) throw SyntaxError("missing value after keyword", key.loc);
    const SExpr& value = e.items[i + 1];
    if (is_keyword(key, ":parameters")) {
      expect_list(value, "parameter list");
      for (const auto& p : value.items) {
        const auto& name = expect_atom(p, "parameter");
        if (name == "-") throw UnsupportedFeature("typing", p.loc);
        if (!is_variable(name)) throw SyntaxError("parameter must start with '?'", p.loc);
        if (std::find(action.parameters.begin(), action.parameters.end(), name) != action.parameters.end())
          throw SemanticError("duplicate parameter " + name, p.loc);
        action.parameters.push_back(name);
      }
    } else if (is_keyword(key, ":precondition")) {
      parse_conjunction(value, action.precondition, nullptr, nullptr);
    } else if (is_keyword(key, ":effect")) {
      std::vector<const SExpr*> numeric;
      parse_conjunction(value, action.add_effects, &action.del_effects, &numeric);
      for (const SExpr* n : numeric) {
        if (have_cost) throw UnsupportedFeature("multiple numeric effects", n->loc);
        action.cost = parse_cost(*n);
        have_cost = true;
      }
    } else if (key.is_atom() && !key.atom.empty() && key.atom.front() == ':') {
      throw UnsupportedFeature(key.atom, key.loc);
    } else {
      throw SyntaxError("expected action keyword", key.loc);
    }
  }
  return action;
}

inline void check_arity(const std::vector<Signature>& decls, const Atom& a) {
  if (decls.empty()) return;
  for (const auto& d : decls) {
    if (d.name != a.predicate) continue;
    if (d.arity != static_cast<int>(a.args.size()))
      throw SemanticError("predicate " + a.predicate + " expects " + std::to_string(d.arity) + " arguments", a.loc);
    return;
  }
  throw SemanticError("undeclared predicate " + a.predicate, a.loc);
}

inline void validate_action(const PddlDomain& domain, const ActionSchema& action) {
  auto check_vars = [&](const std::vector<std::string>& args, SourceLocation loc) {
    for (const auto& a : args)
      if (is_variable(a) && std::find(action.parameters.begin(), action.parameters.end(), a) == action.parameters.end())
        throw SemanticError("variable " + a + " is not a parameter of action " + action.name, loc);
  };
  for (const auto* list : {&action.precondition, &action.add_effects, &action.del_effects})
    for (const auto& atom : *list) {
      check_vars(atom.args, atom.loc);
      check_arity(domain.predicates, atom);
    }
  if (action.cost.kind == CostExpr::Kind::function) check_vars(action.cost.args, action.loc);
}

inline constexpr std::string_view kSupportedRequirements[] = {":strips", ":action-costs"};

}  // namespace detail

/// Parses a STRIPS domain with action costs. Also accepts a bare sequence of
/// (:action ...) forms, which yields an unnamed domain without declarations.
inline PddlDomain parse_domain(std::string_view text) {
  using namespace detail;
  const auto forms = read_sexprs(text);
  if (forms.empty()) throw SyntaxError("expected '(define (domain ...) ...)'", SourceLocation{1, 1});

  PddlDomain domain;
  std::vector<const SExpr*> action_forms;

  if (iequals(head(forms.front()), ":action")) {
    for (const auto& f : forms) {
      if (!iequals(head(f), ":action")) throw SyntaxError("expected '(:action'", f.loc);
      action_forms.push_back(&f);
    }
  } else {
    if (forms.size() != 1) throw SyntaxError("unexpected form after domain definition", forms[1].loc);
    const SExpr& def = forms.front();
    if (!iequals(head(def), "define")) throw SyntaxError("expected '(define'", def.loc);
    if (def.size() < 2 || !iequals(head(def.items[1]), "domain") || def.items[1].size() != 2)
      throw SyntaxError("expected '(domain NAME)'", def.size() < 2 ? def.loc : def.items[1].loc);
    domain.name = expect_atom(def.items[1].items[1], "domain name");
    for (std::size_t i = 2; i < def.size(); ++i) {
      const SExpr& section = expect_list(def.items[i], "domain section");
      const auto h = head(section);
      if (iequals(h, ":requirements")) {
        for (std::size_t k = 1; k < section.size(); ++k) {
          const auto& req = expect_atom(section.items[k], "requirement");
          bool ok = false;
          for (auto s : kSupportedRequirements) ok = ok || iequals(req, s);
          if (!ok) throw UnsupportedFeature(req, section.items[k].loc);
          domain.requirements.push_back(req);
        }
      } else if (iequals(h, ":predicates")) {
        for (std::size_t k = 1; k < section.size(); ++k) domain.predicates.push_back(parse_signature(section.items[k]));
      } else if (iequals(h, ":functions")) {
        for (std::size_t k = 1; k < section.size(); ++k) {
          const auto& item = section.items[k];
          if (item.is_atom()) {
            // "(f) - number" type annotations
            if (item.atom == "-" || iequals(item.atom, "number")) continue;
            throw SyntaxError("expected function declaration", item.loc);
          }
          domain.functions.push_back(parse_signature(item));
        }
      } else if (iequals(h, ":action")) {
        action_forms.push_back(&section);
      } else if (!h.empty() && h.front() == ':') {
        throw UnsupportedFeature(std::string(h), section.loc);
      } else {
        throw SyntaxError("expected domain section", section.loc);
      }
    }
  }

  std::set<std::string> names;
  for (const SExpr* f : action_forms) {
    ActionSchema action = parse_action(*f);
    if (!names.insert(action.name).second) throw SemanticError("duplicate action " + action.name, f->loc);
    validate_action(domain, action);
    domain.actions.push_back(std::move(action));
  }
  return domain;
}

}  // namespace antiplan::pddl
