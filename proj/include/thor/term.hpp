#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace thor {

// Worker-independent term tree. Used for parsed source, queries and
// solution snapshots.
struct Term {
  enum class Kind : std::uint8_t { var, atom, integer, compound };

  Kind kind = Kind::atom;
  std::string name;          // variable name, atom name or functor name
  std::int64_t value = 0;    // integer payload
  std::vector<Term> args;    // compound arguments, arity >= 1

  static Term var(std::string name);
  static Term atom(std::string name);
  static Term integer(std::int64_t v);
  static Term compound(std::string name, std::vector<Term> args);

  bool is_var() const { return kind == Kind::var; }
  bool is_atom() const { return kind == Kind::atom; }
  bool is_integer() const { return kind == Kind::integer; }
  bool is_compound() const { return kind == Kind::compound; }
  bool is_callable() const { return is_atom() || is_compound(); }
  std::size_t arity() const { return args.size(); }

  bool operator==(const Term&) const = default;
};

// '.'/2 chain terminated by `tail` (default []).
Term make_list(std::vector<Term> items, Term tail = Term::atom("[]"));

// Renames variables to _0, _1, ... in order of first occurrence.
Term normalize_vars(const Term& t);

// Operator-aware printing; output reparses to an equal term.
std::string to_string(const Term& t);

bool atom_needs_quotes(std::string_view name);

}  // namespace thor
