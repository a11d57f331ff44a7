#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "thor/cell.hpp"
#include "thor/program.hpp"
#include "thor/term.hpp"

namespace thor {

enum class ErrorKind : std::uint8_t {
  existence,
  instantiation,
  type,
  evaluation,
  representation,
  resource,
};

const char* to_string(ErrorKind k);

class EngineError : public std::runtime_error {
 public:
  EngineError(ErrorKind kind, const std::string& msg);
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct OrFrame;

inline constexpr std::uint32_t kGetwork = 0xffffffffu;

// Saved machine state for one call with untried clauses. A public choice
// point has alt == kGetwork and its untried clauses live in or_frame.
struct ChoicePoint {
  std::uint32_t alt;        // next untried clause index, or kGetwork
  std::uint32_t pred;       // predicate index
  OrFrame* or_frame;        // null while private
  std::int64_t lub;         // private untried alternatives up to and including this node
  Address heap_top;
  Address trail_top;
  Address goal;             // continuation node whose goal made the call

  bool is_public() const { return alt == kGetwork; }
};

struct StackCapacity {
  std::size_t heap = std::size_t{8} << 20;
  std::size_t choice = std::size_t{1} << 20;
  std::size_t trail = std::size_t{1} << 20;
};

enum class SolveMode : std::uint8_t { all, first };

struct MachineStats {
  std::uint64_t calls = 0;
  std::uint64_t alternatives = 0;  // clauses taken from choice points
  std::uint64_t choice_points = 0;
};

class Machine;

// Called right after a choice point is pushed; returning true halts run().
class ChoicePointHook {
 public:
  virtual ~ChoicePointHook() = default;
  virtual bool on_choice_point(Machine& m) = 0;
};

using Bindings = std::vector<std::pair<std::string, Term>>;

// One worker's sequential abstract machine: heap, choice-point stack and
// trail, all addressed absolutely through the worker's slot bases.
class Machine {
 public:
  Machine(const Program& program, unsigned slot, StackCapacity cap = {});
  Machine(const Machine&) = delete;
  Machine& operator=(const Machine&) = delete;

  const Program& program() const { return *program_; }
  unsigned slot() const { return slot_; }

  // Clears all stacks and builds the query's answer record and goals.
  void start(const Query& q);

  enum class Event : std::uint8_t { solution, public_node, exhausted, halted };

  // Runs until a solution, a public choice point, exhaustion or a hook halt.
  // After a solution the next call backtracks first; after a halt it goes on
  // with the first clause of the call that pushed the choice point.
  Event run();

  // Youngest choice point must be public and already restored.
  void resume_alternative(std::uint32_t clause);
  void request_backtrack() { pending_backtrack_ = true; }

  // Deep copy of the query variables; independent of the stacks.
  Bindings answer(const Query& q) const;

  // --- terms ------------------------------------------------------------
  Cell& cell(Address a) { return heap_[a - heap_base_]; }
  const Cell& cell(Address a) const { return heap_[a - heap_base_]; }
  Cell deref(Cell c) const {
    while (c.is_ref()) {
      Cell n = cell(c.address());
      if (n == c) return c;
      c = n;
    }
    return c;
  }
  // Binds the unbound variable `var`; trails only conditional bindings.
  void bind(Cell var, Cell value);
  // Standalone unification: on failure every binding it made is undone.
  bool unify(Address a, Address b);
  bool identical(Cell a, Cell b) const;
  std::int64_t eval_arith(Cell t) const;

  // Builds `t` on the heap; variables are shared through `vars`.
  Cell import_term(const Term& t, std::vector<std::pair<std::string, Cell>>& vars);
  Term export_term(Cell c) const;

  // --- stacks and registers ----------------------------------------------
  Address heap_base() const { return heap_base_; }
  Address choice_base() const { return choice_base_; }
  Address trail_base() const { return trail_base_; }
  Address heap_address(std::size_t off) const { return heap_base_ + off; }

  std::size_t heap_top() const { return h_; }
  std::size_t trail_top() const { return tr_; }
  std::size_t choice_top() const { return b_; }
  const StackCapacity& capacity() const { return cap_; }

  std::span<Cell> heap_cells() { return {heap_.get(), cap_.heap}; }
  std::span<const Cell> heap_cells() const { return {heap_.get(), cap_.heap}; }
  std::span<ChoicePoint> choice_points() { return {cps_.get(), cap_.choice}; }
  std::span<const ChoicePoint> choice_points() const { return {cps_.get(), cap_.choice}; }
  std::span<Address> trail_entries() { return {trail_.get(), cap_.trail}; }
  std::span<const Address> trail_entries() const { return {trail_.get(), cap_.trail}; }

  ChoicePoint& choice_point(std::size_t i) { return cps_[i]; }
  const ChoicePoint& choice_point(std::size_t i) const { return cps_[i]; }

  Cell continuation() const { return cont_; }
  void set_continuation(Cell c) { cont_ = c; }

  // Sets all tops at once (used when installing copied stacks).
  void set_tops(std::size_t heap, std::size_t trail, std::size_t choice);

  // Public choice points form the bottom of the stack.
  std::size_t public_count() const { return public_count_; }
  void set_public_count(std::size_t n) { public_count_ = n; }
  OrFrame* youngest_public() const { return youngest_public_; }
  void set_youngest_public(OrFrame* f) { youngest_public_ = f; }

  // Unwinds trail and heap to the state saved in choice point `index`.
  void restore_to(std::size_t index);
  void unwind_trail(std::size_t to);
  void pop_choice_point();
  void reset_to_root();

  std::int64_t load() const { return b_ ? cps_[b_ - 1].lub : 0; }

  void set_hook(ChoicePointHook* hook) { hook_ = hook; }
  void set_load_sink(std::atomic<std::int64_t>* sink) { load_sink_ = sink; }
  void publish_load() {
    if (load_sink_) load_sink_->store(load(), std::memory_order_relaxed);
  }

  MachineStats& stats() { return stats_; }
  const MachineStats& stats() const { return stats_; }

 private:
  void push_choice_point(Address node, std::uint32_t pred);
  bool backtrack();
  bool resolve(const CompiledClause& c, Address args, Cell next);
  bool unify_head(const CompiledClause& c, Cell t, Address arg);
  Cell build_in_place(const CompiledClause& c, Cell t, Address dest);
  Address build_struct(const CompiledClause& c, std::uint32_t off);
  bool unify_cells(Cell a, Cell b);
  bool call_builtin(Builtin b, Address args);
  bool compare_arith(Builtin b, Address args) const;
  void refresh_hb() { hb_ = b_ ? cps_[b_ - 1].heap_top : heap_base_; }
  using ExportNames = std::unordered_map<Address, std::string>;
  Term export_rec(Cell c, ExportNames& names, std::size_t& budget, std::size_t depth) const;

  const Program* program_;
  const SymbolTable* syms_;
  unsigned slot_;
  StackCapacity cap_;
  Address heap_base_, choice_base_, trail_base_;

  std::unique_ptr<Cell[]> heap_;
  std::unique_ptr<ChoicePoint[]> cps_;
  std::unique_ptr<Address[]> trail_;

  std::size_t h_ = 0, tr_ = 0, b_ = 0;
  Address hb_ = 0;
  Cell cont_ = Cell::atom(0);
  std::size_t public_count_ = 0;
  OrFrame* youngest_public_ = nullptr;

  bool pending_backtrack_ = false;
  bool pending_first_clause_ = false;
  Event backtrack_event_ = Event::exhausted;

  std::vector<Cell> regs_;
  std::vector<std::pair<Cell, Cell>> unify_stack_;

  ChoicePointHook* hook_ = nullptr;
  std::atomic<std::int64_t>* load_sink_ = nullptr;
  MachineStats stats_;
};

// Sequential resolution of `q` on a fresh machine. `sink` sees each solution
// while the machine still holds it. Returns the number of solutions.
std::uint64_t solve(const Program& program, const Query& q, SolveMode mode,
                    const std::function<void(const Machine&)>& sink, StackCapacity cap = {},
                    MachineStats* stats = nullptr);

}  // namespace thor
