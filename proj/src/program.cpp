#include "thor/program.hpp"

#include <map>
#include <stdexcept>

#include "thor/machine.hpp"

namespace thor {

SymbolTable::SymbolTable() {
  nil = atom("[]");
  dot = functor(".", 2);
  cont = functor("$cont", 2);
  done = atom("$done");
  minus1 = functor("-", 1);
  plus2 = functor("+", 2);
  minus2 = functor("-", 2);
  times2 = functor("*", 2);
  intdiv2 = functor("//", 2);
  mod2 = functor("mod", 2);
}

std::uint32_t SymbolTable::atom(std::string_view name) {
  auto it = atom_ids_.find(std::string(name));
  if (it != atom_ids_.end()) return it->second;
  auto id = static_cast<std::uint32_t>(atoms_.size());
  atoms_.emplace_back(name);
  atom_ids_.emplace(atoms_.back(), id);
  atom_functor_.push_back(0);
  atom_functor_[id] = functor(id, 0);
  return id;
}

std::uint32_t SymbolTable::functor(std::uint32_t atom, std::uint32_t arity) {
  const std::uint64_t key = (std::uint64_t(atom) << 32) | arity;
  auto it = functor_ids_.find(key);
  if (it != functor_ids_.end()) return it->second;
  auto id = static_cast<std::uint32_t>(functors_.size());
  functors_.emplace_back(atom, arity);
  functor_ids_.emplace(key, id);
  return id;
}

namespace {

class ClauseCompiler {
 public:
  ClauseCompiler(SymbolTable& syms, CompiledClause& out) : syms_(syms), out_(out) {}

  Cell emit(const Term& t) {
    switch (t.kind) {
      case Term::Kind::var: {
        auto [it, fresh] = vars_.try_emplace(t.name, static_cast<std::uint32_t>(vars_.size()));
        return Cell::tvar(it->second);
      }
      case Term::Kind::atom:
        return Cell::atom(syms_.atom(t.name));
      case Term::Kind::integer:
        if (!fits_cell_integer(t.value))
          throw EngineError(ErrorKind::representation,
                            "integer literal out of range: " + std::to_string(t.value));
        return Cell::integer(t.value);
      case Term::Kind::compound:
        break;
    }
    const auto off = static_cast<std::uint32_t>(out_.code.size());
    const auto n = static_cast<std::uint32_t>(t.args.size());
    out_.code.push_back(Cell::functor(syms_.functor(t.name, n)));
    out_.code.resize(off + 1 + n);
    for (std::uint32_t i = 0; i < n; ++i) {
      Cell c = emit(t.args[i]);
      out_.code[off + 1 + i] = c;
    }
    return Cell::tstr(off);
  }

  std::uint32_t var_count() const { return static_cast<std::uint32_t>(vars_.size()); }

 private:
  SymbolTable& syms_;
  CompiledClause& out_;
  std::map<std::string, std::uint32_t> vars_;
};

}  // namespace

CompiledClause Program::compile(const Term& head, const std::vector<Term>& body) {
  CompiledClause cc;
  ClauseCompiler comp(symbols_, cc);
  cc.arity = static_cast<std::uint32_t>(head.is_compound() ? head.args.size() : 0);
  cc.code.resize(cc.arity);
  for (std::uint32_t i = 0; i < cc.arity; ++i) {
    Cell c = comp.emit(head.args[i]);
    cc.code[i] = c;
  }
  for (const auto& g : body) {
    if (g.is_integer()) throw EngineError(ErrorKind::type, "integer is not callable");
    cc.goals.push_back(comp.emit(g));
  }
  cc.num_vars = comp.var_count();
  cc.max_heap = static_cast<std::uint32_t>(cc.code.size() - cc.arity + 3 * cc.goals.size());
  return cc;
}

Program::Program(const PredicateTable& table) {
  const std::pair<const char*, Builtin> builtins[] = {
      {"true", Builtin::true_},      {"fail", Builtin::fail},
      {"=", Builtin::unify},         {"==", Builtin::identical},
      {"\\==", Builtin::not_identical}, {"is", Builtin::is},
      {"=:=", Builtin::arith_eq},    {"=\\=", Builtin::arith_ne},
      {"<", Builtin::less},          {">", Builtin::greater},
      {"=<", Builtin::less_eq},      {">=", Builtin::greater_eq},
  };
  for (auto [name, b] : builtins) {
    std::uint32_t arity = (b == Builtin::true_ || b == Builtin::fail) ? 0 : 2;
    builtins_.emplace_back(symbols_.functor(name, arity), b);
  }
  for (const auto& key : table.keys()) {
    Predicate p;
    p.functor = symbols_.functor(key.name, static_cast<std::uint32_t>(key.arity));
    for (const auto& c : table.lookup(key)) p.clauses.push_back(compile(c.head, c.body));
    preds_.push_back(std::move(p));
  }
  refresh_dispatch();
}

void Program::refresh_dispatch() {
  dispatch_.assign(symbols_.functor_count(), kUnknown);
  for (auto [f, b] : builtins_) dispatch_[f] = -static_cast<std::int32_t>(b) - 2;
  for (std::size_t i = 0; i < preds_.size(); ++i)
    dispatch_[preds_[i].functor] = static_cast<std::int32_t>(i);
}

Query Program::compile_query(const Term& goal) {
  if (!goal.is_callable()) throw EngineError(ErrorKind::type, "goal is not callable");
  Query q;
  q.goal = goal;
  // collect named variables in order of first occurrence; anonymous ones
  // (which the reader names "_#N") are not reported
  std::vector<std::string> names;
  auto collect = [&](auto& self, const Term& t) -> void {
    if (t.is_var()) {
      if (t.name.starts_with("_#")) return;
      for (const auto& n : names)
        if (n == t.name) return;
      names.push_back(t.name);
    }
    for (const auto& a : t.args) self(self, a);
  };
  collect(collect, goal);
  std::vector<Term> head_args;
  for (const auto& n : names) head_args.push_back(Term::var(n));
  Term head = head_args.empty() ? Term::atom("$answer")
                                : Term::compound("$answer", std::move(head_args));
  q.answer_functor = symbols_.functor("$answer", static_cast<std::uint32_t>(names.size()));
  q.clause = compile(head, flatten_conjunction(goal));
  q.var_names = std::move(names);
  refresh_dispatch();
  return q;
}

}  // namespace thor
