#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "thor/cell.hpp"
#include "thor/reader.hpp"
#include "thor/term.hpp"

namespace thor {

class SymbolTable {
 public:
  SymbolTable();

  std::uint32_t atom(std::string_view name);
  std::uint32_t functor(std::uint32_t atom, std::uint32_t arity);
  std::uint32_t functor(std::string_view name, std::uint32_t arity) {
    return functor(atom(name), arity);
  }

  const std::string& atom_name(std::uint32_t id) const { return atoms_[id]; }
  std::uint32_t functor_atom(std::uint32_t f) const { return functors_[f].first; }
  std::uint32_t functor_arity(std::uint32_t f) const { return functors_[f].second; }
  const std::string& functor_name(std::uint32_t f) const { return atoms_[functors_[f].first]; }
  // Functor id of name/0 for an atom.
  std::uint32_t atom_functor(std::uint32_t atom) const { return atom_functor_[atom]; }

  std::size_t atom_count() const { return atoms_.size(); }
  std::size_t functor_count() const { return functors_.size(); }

  // Well-known symbols, interned at construction.
  std::uint32_t nil = 0;           // []
  std::uint32_t dot = 0;           // '.'/2
  std::uint32_t cont = 0;          // '$cont'/2 continuation node
  std::uint32_t done = 0;          // '$done' empty continuation
  std::uint32_t minus1 = 0;        // -/1
  std::uint32_t plus2 = 0, minus2 = 0, times2 = 0, intdiv2 = 0, mod2 = 0;

 private:
  std::vector<std::string> atoms_;
  std::unordered_map<std::string, std::uint32_t> atom_ids_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> functors_;
  std::unordered_map<std::uint64_t, std::uint32_t> functor_ids_;
  std::vector<std::uint32_t> atom_functor_;
};

enum class Builtin : std::uint8_t {
  none,
  true_,
  fail,
  unify,
  identical,
  not_identical,
  is,
  arith_eq,
  arith_ne,
  less,
  greater,
  less_eq,
  greater_eq,
};

// A clause flattened into template cells. Head argument cells occupy
// code[0, arity); compound subterms are blocks (functor cell followed by
// argument cells) addressed by tstr offsets; clause variables are tvar.
struct CompiledClause {
  std::vector<Cell> code;
  std::vector<Cell> goals;     // one cell per body goal
  std::uint32_t arity = 0;
  std::uint32_t num_vars = 0;
  std::uint32_t max_heap = 0;  // upper bound on heap cells one resolution allocates
};

struct Predicate {
  std::uint32_t functor = 0;
  std::vector<CompiledClause> clauses;
};

// A goal compiled for execution: its variables become the arguments of an
// answer record built at the bottom of the heap.
struct Query {
  CompiledClause clause;       // head = answer record, body = goals
  std::vector<std::string> var_names;
  std::uint32_t answer_functor = 0;
  Term goal;
};

// Compiled, read-only database shared by every worker.
class Program {
 public:
  explicit Program(const PredicateTable& table);

  // Interns the query's symbols; call before any worker starts.
  Query compile_query(const Term& goal);

  SymbolTable& symbols() { return symbols_; }
  const SymbolTable& symbols() const { return symbols_; }

  const std::vector<Predicate>& predicates() const { return preds_; }
  const Predicate& predicate(std::uint32_t index) const { return preds_[index]; }

  // >= 0: predicate index; -1: unknown; otherwise a built-in.
  static constexpr std::int32_t kUnknown = -1;
  std::int32_t target(std::uint32_t functor) const {
    return functor < dispatch_.size() ? dispatch_[functor] : kUnknown;
  }
  static bool is_builtin_target(std::int32_t t) { return t < kUnknown; }
  static Builtin builtin_of(std::int32_t t) { return static_cast<Builtin>(-t - 2); }

  const std::vector<std::int32_t>& dispatch_table() const { return dispatch_; }

 private:
  CompiledClause compile(const Term& head, const std::vector<Term>& body);
  void refresh_dispatch();

  SymbolTable symbols_;
  std::vector<Predicate> preds_;
  std::vector<std::int32_t> dispatch_;
  std::vector<std::pair<std::uint32_t, Builtin>> builtins_;
};

}  // namespace thor
