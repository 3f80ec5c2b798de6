#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "antiplan/common.hpp"

namespace antiplan::pddl {

struct SourceLocation {
  int line = 1;
  int column = 1;
};

inline std::string to_string(SourceLocation loc) {
  return std::to_string(loc.line) + ":" + std::to_string(loc.column);
}

struct SyntaxError : Error {
  SyntaxError(const std::string& what, SourceLocation loc)
      : Error("syntax error at " + pddl::to_string(loc) + ": " + what), where(loc) {}
  SourceLocation where;
};

struct UnsupportedFeature : Error {
  UnsupportedFeature(std::string construct_name, SourceLocation loc)
      : Error("unsupported PDDL feature '" + construct_name + "' at " + pddl::to_string(loc)),
        construct(std::move(construct_name)),
        where(loc) {}
  std::string construct;
  SourceLocation where;
};

/// Well-formed input that violates a static rule (unbound variable, arity
/// mismatch, duplicate names).
struct SemanticError : Error {
  SemanticError(const std::string& what, SourceLocation loc)
      : Error("error at " + pddl::to_string(loc) + ": " + what), where(loc) {}
  SourceLocation where;
};

struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  SourceLocation loc;

  bool is_atom() const { return !is_list; }
  std::size_t size() const { return items.size(); }
  const SExpr& operator[](std::size_t i) const { return items[i]; }
};

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

inline bool is_keyword(const SExpr& e, std::string_view kw) { return e.is_atom() && iequals(e.atom, kw); }

/// Head symbol of a list, or empty.
inline std::string_view head(const SExpr& e) {
  if (!e.is_list || e.items.empty() || !e.items[0].is_atom()) return {};
  return e.items[0].atom;
}

inline constexpr int kMaxNesting = 256;

/// Reads all top-level forms. Comments run from ';' to end of line. Never
/// recurses, so adversarial nesting cannot exhaust the stack.
inline std::vector<SExpr> read_sexprs(std::string_view text) {
  std::vector<SExpr> stack;  // open lists
  std::vector<SExpr> top;
  SourceLocation loc;
  std::size_t i = 0;

  auto advance = [&](char c) {
    ++i;
    if (c == '\n') {
      ++loc.line;
      loc.column = 1;
    } else {
      ++loc.column;
    }
  };
  auto emit = [&](SExpr e) {
    if (stack.empty()) {
      top.push_back(std::move(e));
    } else {
      stack.back().items.push_back(std::move(e));
    }
  };

  while (i < text.size()) {
    const char c = text[i];
    const auto uc = static_cast<unsigned char>(c);
    if (c == ';') {
      while (i < text.size() && text[i] != '\n') advance(text[i]);
    } else if (std::isspace(uc)) {
      advance(c);
    } else if (c == '(') {
      if (static_cast<int>(stack.size()) >= kMaxNesting) throw SyntaxError("nesting too deep", loc);
      SExpr list;
      list.is_list = true;
      list.loc = loc;
      stack.push_back(std::move(list));
      advance(c);
    } else if (c == ')') {
      if (stack.empty()) throw SyntaxError("unbalanced ')'", loc);
      SExpr done = std::move(stack.back());
      stack.pop_back();
      emit(std::move(done));
      advance(c);
    } else if (uc < 0x20 || uc >= 0x7f) {
      throw SyntaxError("unexpected byte 0x" + std::string(1, "0123456789abcdef"[uc >> 4]) +
                            std::string(1, "0123456789abcdef"[uc & 15]),
                        loc);
    } else {
      SExpr atom;
      atom.loc = loc;
      while (i < text.size()) {
        const char d = text[i];
        const auto ud = static_cast<unsigned char>(d);
        if (d == '(' || d == ')' || d == ';' || std::isspace(ud) || ud < 0x20 || ud >= 0x7f) break;
        atom.atom.push_back(d);
        advance(d);
      }
      emit(std::move(atom));
    }
  }
  if (!stack.empty()) throw SyntaxError("unterminated list opened here", stack.back().loc);
  return top;
}

}  // namespace antiplan::pddl
