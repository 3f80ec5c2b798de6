#pragma once

#include <array>
#include <charconv>
#include <map>
#include <string>
#include <vector>

#include "antiplan/pddl/domain.hpp"

namespace antiplan::pddl {

struct GroundAtom {
  std::string predicate;
  std::vector<std::string> args;

  friend bool operator==(const GroundAtom&, const GroundAtom&) = default;
  friend auto operator<=>(const GroundAtom&, const GroundAtom&) = default;
};

inline std::string to_string(const GroundAtom& a) {
  std::string s = "(" + a.predicate;
  for (const auto& x : a.args) s += " " + x;
  return s + ")";
}

/// Objects, initial atoms, numeric function values and a conjunctive goal.
struct ProblemInstance {
  std::string name;
  std::string domain;
  std::vector<std::string> objects;
  std::vector<GroundAtom> init;
  std::map<GroundAtom, double> function_values;
  std::vector<GroundAtom> goal;
};

/// Shortest decimal text that reads back to exactly the same double.
inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline ProblemInstance parse_problem(std::string_view text) {
  using namespace detail;
  const auto forms = read_sexprs(text);
  if (forms.empty()) throw SyntaxError("expected '(define (problem ...) ...)'", SourceLocation{1, 1});
  if (forms.size() != 1) throw SyntaxError("unexpected form after problem definition", forms[1].loc);
  const SExpr& def = forms.front();
  if (!iequals(head(def), "define")) throw SyntaxError("expected '(define'", def.loc);
  if (def.size() < 2 || !iequals(head(def.items[1]), "problem") || def.items[1].size() != 2)
    throw SyntaxError("expected '(problem NAME)'", def.size() < 2 ? def.loc : def.items[1].loc);

  ProblemInstance p;
  p.name = expect_atom(def.items[1].items[1], "problem name");
  for (std::size_t i = 2; i < def.size(); ++i) {
    const SExpr& section = expect_list(def.items[i], "problem section");
    const auto h = head(section);
    if (iequals(h, ":domain")) {
      if (section.size() != 2) throw SyntaxError("expected '(:domain NAME)'", section.loc);
      p.domain = expect_atom(section.items[1], "domain name");
    } else if (iequals(h, ":objects")) {
      for (std::size_t k = 1; k < section.size(); ++k) {
        const auto& o = expect_atom(section.items[k], "object name");
        if (o == "-") throw UnsupportedFeature("typing", section.items[k].loc);
        p.objects.push_back(o);
      }
    } else if (iequals(h, ":init")) {
      for (std::size_t k = 1; k < section.size(); ++k) {
        const SExpr& item = expect_list(section.items[k], "initial atom");
        if (iequals(head(item), "=")) {
          if (item.size() != 3) throw SyntaxError("expected '(= (f args) value)'", item.loc);
          Atom term = parse_atom(item.items[1]);
          double value = 0.0;
          if (!parse_number(expect_atom(item.items[2], "number"), value))
            throw SyntaxError("expected a number", item.items[2].loc);
          p.function_values[GroundAtom{term.predicate, term.args}] = value;
          continue;
        }
        reject_connective(item);
        Atom a = parse_atom(item);
        p.init.push_back({a.predicate, a.args});
      }
    } else if (iequals(h, ":goal")) {
      if (section.size() != 2) throw SyntaxError("expected '(:goal CONDITION)'", section.loc);
      std::vector<Atom> atoms;
      parse_conjunction(section.items[1], atoms, nullptr, nullptr);
      for (auto& a : atoms) p.goal.push_back({a.predicate, a.args});
    } else if (iequals(h, ":metric")) {
      if (section.size() != 3 || !is_keyword(section.items[1], "minimize") || !section.items[2].is_list ||
          section.items[2].size() != 1 || !is_keyword(section.items[2].items[0], "total-cost"))
        throw UnsupportedFeature("metric other than (minimize (total-cost))", section.loc);
    } else if (!h.empty() && h.front() == ':') {
      throw UnsupportedFeature(std::string(h), section.loc);
    } else {
      throw SyntaxError("expected problem section", section.loc);
    }
  }
  return p;
}

/// Renders an instance as PDDL problem text; parse_problem inverts it.
inline std::string render_problem(const ProblemInstance& p) {
  std::string out = "(define (problem " + p.name + ")\n  (:domain " + p.domain + ")\n  (:objects";
  for (const auto& o : p.objects) out += " " + o;
  out += ")\n  (:init\n";
  for (const auto& a : p.init) out += "    " + to_string(a) + "\n";
  for (const auto& [term, value] : p.function_values)
    out += "    (= " + to_string(term) + " " + format_number(value) + ")\n";
  out += "  )\n  (:goal (and";
  for (const auto& a : p.goal) out += " " + to_string(a);
  out += "))\n  (:metric minimize (total-cost)))\n";
  return out;
}

}  // namespace antiplan::pddl
