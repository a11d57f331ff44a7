#include "thor/machine.hpp"

#include <algorithm>

namespace thor {

namespace {

constexpr Cell kUnset = Cell::from_raw(~std::uint64_t{0});

// Budget of cells visited when exporting one answer; cyclic terms created
// without occurs-check are cut off with '...'.
// Bounds on exporting a term; without an occurs check a cyclic term would
// never end, so it is cut off with '...'.
constexpr std::size_t kExportBudget = std::size_t{1} << 22;
constexpr std::size_t kExportDepth = 10000;

}  // namespace

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::existence: return "existence_error";
    case ErrorKind::instantiation: return "instantiation_error";
    case ErrorKind::type: return "type_error";
    case ErrorKind::evaluation: return "evaluation_error";
    case ErrorKind::representation: return "representation_error";
    case ErrorKind::resource: return "resource_error";
  }
  return "error";
}

EngineError::EngineError(ErrorKind kind, const std::string& msg)
    : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

Machine::Machine(const Program& program, unsigned slot, StackCapacity cap)
    : program_(&program),
      syms_(&program.symbols()),
      slot_(slot),
      cap_(cap),
      heap_base_(stack_base(slot, StackKind::heap)),
      choice_base_(stack_base(slot, StackKind::choice)),
      trail_base_(stack_base(slot, StackKind::trail)),
      heap_(new Cell[cap.heap]),
      cps_(new ChoicePoint[cap.choice]),
      trail_(new Address[cap.trail]) {
  if (slot >= kMaxSlots) throw std::invalid_argument("machine slot out of range");
  if (cap.heap > kOffsetMask || cap.choice > kOffsetMask || cap.trail > kOffsetMask)
    throw std::invalid_argument("stack capacity exceeds address range");
  hb_ = heap_base_;
}

void Machine::start(const Query& q) {
  reset_to_root();
  stats_ = {};
  const CompiledClause& c = q.clause;
  if (c.max_heap + c.arity + 1 > cap_.heap)
    throw EngineError(ErrorKind::resource, "heap overflow");
  regs_.assign(std::max<std::size_t>(regs_.size(), c.num_vars), kUnset);
  std::fill(regs_.begin(), regs_.begin() + c.num_vars, kUnset);

  const Address rec = heap_address(0);
  h_ = 1 + c.arity;
  cell(rec) = Cell::functor(q.answer_functor);
  for (std::uint32_t i = 0; i < c.arity; ++i) cell(rec + 1 + i) = build_in_place(c, c.code[i], rec + 1 + i);

  const Cell done = Cell::atom(syms_->done);
  const std::size_t n = c.goals.size();
  if (n == 0) {
    cont_ = done;
  } else {
    const Address base = heap_address(h_);
    h_ += 3 * n;
    for (std::size_t k = 0; k < n; ++k) {
      const Address node = base + 3 * k;
      cell(node) = Cell::functor(syms_->cont);
      cell(node + 2) = k + 1 < n ? Cell::str(node + 3) : done;
    }
    for (std::size_t k = 0; k < n; ++k)
      cell(base + 3 * k + 1) = build_in_place(c, c.goals[k], base + 3 * k + 1);
    cont_ = Cell::str(base);
  }
}

void Machine::reset_to_root() {
  h_ = tr_ = b_ = 0;
  public_count_ = 0;
  youngest_public_ = nullptr;
  hb_ = heap_base_;
  cont_ = Cell::atom(syms_->done);
  pending_backtrack_ = false;
  pending_first_clause_ = false;
  publish_load();
}

void Machine::set_tops(std::size_t heap, std::size_t trail, std::size_t choice) {
  h_ = heap;
  tr_ = trail;
  b_ = choice;
  refresh_hb();
}

void Machine::bind(Cell var, Cell value) {
  const Address a = var.address();
  cell(a) = value;
  if (a < hb_) {
    if (tr_ == cap_.trail) throw EngineError(ErrorKind::resource, "trail overflow");
    trail_[tr_++] = a;
  }
}

void Machine::unwind_trail(std::size_t to) {
  while (tr_ > to) {
    const Address a = trail_[--tr_];
    cell(a) = Cell::ref(a);
  }
}

void Machine::restore_to(std::size_t index) {
  const ChoicePoint& cp = cps_[index];
  unwind_trail(cp.trail_top - trail_base_);
  h_ = cp.heap_top - heap_base_;
}

void Machine::pop_choice_point() {
  --b_;
  if (public_count_ > b_) public_count_ = b_;
  refresh_hb();
  publish_load();
}

void Machine::push_choice_point(Address node, std::uint32_t pred) {
  if (b_ == cap_.choice) throw EngineError(ErrorKind::resource, "choice-point stack overflow");
  const auto untried =
      static_cast<std::int64_t>(program_->predicate(pred).clauses.size()) - 1;
  ChoicePoint& cp = cps_[b_];
  cp.alt = 1;
  cp.pred = pred;
  cp.or_frame = nullptr;
  cp.lub = (b_ ? cps_[b_ - 1].lub : 0) + untried;
  cp.heap_top = heap_address(h_);
  cp.trail_top = trail_base_ + tr_;
  cp.goal = node;
  ++b_;
  hb_ = cp.heap_top;
  ++stats_.choice_points;
  publish_load();
}

Machine::Event Machine::run() {
  const auto& preds = program_->predicates();
  if (pending_first_clause_) {
    // halted right after a push: the first clause of that call is still owed
    pending_first_clause_ = false;
    const ChoicePoint& cp = cps_[b_ - 1];
    const Cell goal = deref(cell(cp.goal + 1));
    const Address args = goal.is_str() ? goal.address() + 1 : 0;
    if (!resolve(preds[cp.pred].clauses[0], args, cell(cp.goal + 2))) pending_backtrack_ = true;
  }
  if (pending_backtrack_) {
    pending_backtrack_ = false;
    if (!backtrack()) return backtrack_event_;
  }
  for (;;) {
    if (!cont_.is_str()) {
      pending_backtrack_ = true;
      return Event::solution;
    }
    const Address node = cont_.address();
    const Cell goal = deref(cell(node + 1));
    std::uint32_t functor;
    Address args = 0;
    switch (goal.tag()) {
      case Tag::atom:
        functor = syms_->atom_functor(goal.id());
        break;
      case Tag::str:
        functor = cell(goal.address()).id();
        args = goal.address() + 1;
        break;
      case Tag::ref:
        throw EngineError(ErrorKind::instantiation, "goal is an unbound variable");
      default:
        throw EngineError(ErrorKind::type, "goal is not callable");
    }
    ++stats_.calls;
    const std::int32_t target = program_->target(functor);
    bool ok;
    if (target >= 0) {
      const Predicate& p = preds[static_cast<std::size_t>(target)];
      if (p.clauses.size() > 1) {
        push_choice_point(node, static_cast<std::uint32_t>(target));
        if (hook_ && hook_->on_choice_point(*this)) {
          pending_first_clause_ = true;
          return Event::halted;
        }
      }
      ok = resolve(p.clauses[0], args, cell(node + 2));
    } else if (target == Program::kUnknown) {
      throw EngineError(ErrorKind::existence, "unknown procedure " + syms_->functor_name(functor) +
                                                  "/" + std::to_string(syms_->functor_arity(functor)));
    } else {
      ok = call_builtin(Program::builtin_of(target), args);
      if (ok) cont_ = cell(node + 2);
    }
    if (!ok && !backtrack()) return backtrack_event_;
  }
}

bool Machine::backtrack() {
  const auto& preds = program_->predicates();
  for (;;) {
    if (b_ == 0) {
      backtrack_event_ = Event::exhausted;
      return false;
    }
    ChoicePoint& cp = cps_[b_ - 1];
    unwind_trail(cp.trail_top - trail_base_);
    h_ = cp.heap_top - heap_base_;
    if (cp.alt == kGetwork) {
      backtrack_event_ = Event::public_node;
      return false;
    }
    const Predicate& p = preds[cp.pred];
    const std::uint32_t alt = cp.alt++;
    --cp.lub;
    ++stats_.alternatives;
    const Address node = cp.goal;
    if (cp.alt == p.clauses.size()) {
      --b_;
      refresh_hb();
    }
    publish_load();
    const Cell goal = deref(cell(node + 1));
    const Address args = goal.is_str() ? goal.address() + 1 : 0;
    if (resolve(p.clauses[alt], args, cell(node + 2))) return true;
  }
}

void Machine::resume_alternative(std::uint32_t clause) {
  const ChoicePoint& cp = cps_[b_ - 1];
  ++stats_.alternatives;
  const Address node = cp.goal;
  const Predicate& p = program_->predicate(cp.pred);
  const Cell goal = deref(cell(node + 1));
  const Address args = goal.is_str() ? goal.address() + 1 : 0;
  pending_backtrack_ = !resolve(p.clauses[clause], args, cell(node + 2));
}

bool Machine::resolve(const CompiledClause& c, Address args, Cell next) {
  if (h_ + c.max_heap > cap_.heap) throw EngineError(ErrorKind::resource, "heap overflow");
  if (regs_.size() < c.num_vars) regs_.resize(c.num_vars);
  std::fill_n(regs_.begin(), c.num_vars, kUnset);
  for (std::uint32_t i = 0; i < c.arity; ++i) {
    if (!unify_head(c, c.code[i], args + i)) return false;
  }
  const std::size_t n = c.goals.size();
  if (n == 0) {
    cont_ = next;
    return true;
  }
  const Address base = heap_address(h_);
  h_ += 3 * n;
  const Cell cont_functor = Cell::functor(syms_->cont);
  for (std::size_t k = 0; k < n; ++k) {
    const Address node = base + 3 * k;
    cell(node) = cont_functor;
    cell(node + 2) = k + 1 < n ? Cell::str(node + 3) : next;
  }
  for (std::size_t k = 0; k < n; ++k)
    cell(base + 3 * k + 1) = build_in_place(c, c.goals[k], base + 3 * k + 1);
  cont_ = Cell::str(base);
  return true;
}

Cell Machine::build_in_place(const CompiledClause& c, Cell t, Address dest) {
  switch (t.tag()) {
    case Tag::tvar: {
      Cell& r = regs_[t.id()];
      if (r == kUnset) r = Cell::ref(dest);
      return r;
    }
    case Tag::tstr:
      return Cell::str(build_struct(c, t.id()));
    default:
      return t;
  }
}

Address Machine::build_struct(const CompiledClause& c, std::uint32_t off) {
  const Cell f = c.code[off];
  const std::uint32_t n = syms_->functor_arity(f.id());
  const Address a = heap_address(h_);
  h_ += n + 1;
  cell(a) = f;
  for (std::uint32_t i = 0; i < n; ++i) {
    const Cell v = build_in_place(c, c.code[off + 1 + i], a + 1 + i);
    cell(a + 1 + i) = v;
  }
  return a;
}

bool Machine::unify_head(const CompiledClause& c, Cell t, Address arg) {
  switch (t.tag()) {
    case Tag::tvar: {
      Cell& r = regs_[t.id()];
      if (r == kUnset) {
        r = cell(arg);
        return true;
      }
      return unify_cells(r, cell(arg));
    }
    case Tag::tstr: {
      const Cell d = deref(cell(arg));
      if (d.is_ref()) {
        const Address s = build_struct(c, t.id());
        bind(d, Cell::str(s));
        return true;
      }
      if (!d.is_str()) return false;
      const Address s = d.address();
      const Cell f = c.code[t.id()];
      if (cell(s) != f) return false;
      const std::uint32_t n = syms_->functor_arity(f.id());
      for (std::uint32_t i = 0; i < n; ++i) {
        if (!unify_head(c, c.code[t.id() + 1 + i], s + 1 + i)) return false;
      }
      return true;
    }
    default: {
      const Cell d = deref(cell(arg));
      if (d.is_ref()) {
        bind(d, t);
        return true;
      }
      return d == t;
    }
  }
}

bool Machine::unify_cells(Cell a, Cell b) {
  unify_stack_.clear();
  unify_stack_.emplace_back(a, b);
  while (!unify_stack_.empty()) {
    auto [x, y] = unify_stack_.back();
    unify_stack_.pop_back();
    x = deref(x);
    y = deref(y);
    if (x == y) continue;
    if (x.is_ref()) {
      if (y.is_ref() && y.address() > x.address()) bind(y, x);
      else bind(x, y);
      continue;
    }
    if (y.is_ref()) {
      bind(y, x);
      continue;
    }
    if (!x.is_str() || !y.is_str()) return false;
    const Address xs = x.address(), ys = y.address();
    if (cell(xs) != cell(ys)) return false;
    const std::uint32_t n = syms_->functor_arity(cell(xs).id());
    for (std::uint32_t i = n; i >= 1; --i) unify_stack_.emplace_back(cell(xs + i), cell(ys + i));
  }
  return true;
}

bool Machine::unify(Address a, Address b) {
  const std::size_t saved_tr = tr_;
  const Address saved_hb = hb_;
  hb_ = ~Address{0};  // trail everything during the attempt
  const bool ok = unify_cells(cell(a), cell(b));
  if (!ok) {
    unwind_trail(saved_tr);
  } else {
    std::size_t w = saved_tr;
    for (std::size_t r = saved_tr; r < tr_; ++r) {
      if (trail_[r] < saved_hb) trail_[w++] = trail_[r];
    }
    tr_ = w;
  }
  hb_ = saved_hb;
  return ok;
}

bool Machine::identical(Cell a, Cell b) const {
  std::vector<std::pair<Cell, Cell>> stack{{a, b}};
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    x = deref(x);
    y = deref(y);
    if (x == y) continue;
    if (!x.is_str() || !y.is_str()) return false;
    const Address xs = x.address(), ys = y.address();
    if (cell(xs) != cell(ys)) return false;
    const std::uint32_t n = syms_->functor_arity(cell(xs).id());
    for (std::uint32_t i = 1; i <= n; ++i) stack.emplace_back(cell(xs + i), cell(ys + i));
  }
  return true;
}

std::int64_t Machine::eval_arith(Cell t) const {
  t = deref(t);
  switch (t.tag()) {
    case Tag::integer:
      return t.integer_value();
    case Tag::ref:
      throw EngineError(ErrorKind::instantiation, "arithmetic on an unbound variable");
    case Tag::atom:
      throw EngineError(ErrorKind::type, "evaluable expected, found atom " + syms_->atom_name(t.id()));
    case Tag::str:
      break;
    default:
      throw EngineError(ErrorKind::type, "evaluable expected");
  }
  const Address s = t.address();
  const std::uint32_t f = cell(s).id();
  auto check = [](bool overflow, std::int64_t v) {
    if (overflow || !fits_cell_integer(v))
      throw EngineError(ErrorKind::representation, "integer overflow");
    return v;
  };
  if (f == syms_->minus1) {
    const std::int64_t x = eval_arith(cell(s + 1));
    return check(false, -x);
  }
  const bool binary = f == syms_->plus2 || f == syms_->minus2 || f == syms_->times2 ||
                      f == syms_->intdiv2 || f == syms_->mod2;
  if (!binary)
    throw EngineError(ErrorKind::type, "evaluable expected, found " + syms_->functor_name(f) + "/" +
                                           std::to_string(syms_->functor_arity(f)));
  const std::int64_t x = eval_arith(cell(s + 1));
  const std::int64_t y = eval_arith(cell(s + 2));
  std::int64_t r = 0;
  if (f == syms_->plus2) {
    const bool overflow = __builtin_add_overflow(x, y, &r);
    return check(overflow, r);
  }
  if (f == syms_->minus2) {
    const bool overflow = __builtin_sub_overflow(x, y, &r);
    return check(overflow, r);
  }
  if (f == syms_->times2) {
    const bool overflow = __builtin_mul_overflow(x, y, &r);
    return check(overflow, r);
  }
  if (y == 0) throw EngineError(ErrorKind::evaluation, "zero divisor");
  if (f == syms_->intdiv2) return check(false, x / y);
  r = x % y;
  if (r != 0 && ((r < 0) != (y < 0))) r += y;
  return r;
}

bool Machine::compare_arith(Builtin b, Address args) const {
  const std::int64_t x = eval_arith(cell(args));
  const std::int64_t y = eval_arith(cell(args + 1));
  switch (b) {
    case Builtin::arith_eq: return x == y;
    case Builtin::arith_ne: return x != y;
    case Builtin::less: return x < y;
    case Builtin::greater: return x > y;
    case Builtin::less_eq: return x <= y;
    case Builtin::greater_eq: return x >= y;
    default: return false;
  }
}

bool Machine::call_builtin(Builtin b, Address args) {
  switch (b) {
    case Builtin::true_:
      return true;
    case Builtin::fail:
      return false;
    case Builtin::unify:
      return unify_cells(cell(args), cell(args + 1));
    case Builtin::identical:
      return identical(cell(args), cell(args + 1));
    case Builtin::not_identical:
      return !identical(cell(args), cell(args + 1));
    case Builtin::is:
      return unify_cells(cell(args), Cell::integer(eval_arith(cell(args + 1))));
    case Builtin::none:
      return false;
    default:
      return compare_arith(b, args);
  }
}

Cell Machine::import_term(const Term& t, std::vector<std::pair<std::string, Cell>>& vars) {
  switch (t.kind) {
    case Term::Kind::var: {
      for (auto& [n, c] : vars)
        if (n == t.name) return c;
      const Address a = heap_address(h_++);
      cell(a) = Cell::ref(a);
      vars.emplace_back(t.name, Cell::ref(a));
      return Cell::ref(a);
    }
    case Term::Kind::atom:
      return Cell::atom(const_cast<SymbolTable*>(syms_)->atom(t.name));
    case Term::Kind::integer:
      return Cell::integer(t.value);
    case Term::Kind::compound:
      break;
  }
  const auto n = static_cast<std::uint32_t>(t.args.size());
  const Address a = heap_address(h_);
  h_ += n + 1;
  cell(a) = Cell::functor(const_cast<SymbolTable*>(syms_)->functor(t.name, n));
  for (std::uint32_t i = 0; i < n; ++i) {
    const Cell v = import_term(t.args[i], vars);
    cell(a + 1 + i) = v;
  }
  return Cell::str(a);
}

Term Machine::export_rec(Cell c, ExportNames& names, std::size_t& budget,
                         std::size_t depth) const {
  if (budget == 0 || depth > kExportDepth) return Term::atom("...");
  --budget;
  c = deref(c);
  switch (c.tag()) {
    case Tag::ref: {
      auto [it, fresh] = names.try_emplace(c.address(), "_" + std::to_string(names.size()));
      return Term::var(it->second);
    }
    case Tag::atom:
      return Term::atom(syms_->atom_name(c.id()));
    case Tag::integer:
      return Term::integer(c.integer_value());
    default:
      break;
  }
  const Address s = c.address();
  const std::uint32_t f = cell(s).id();
  if (f == syms_->dot) {
    // lists iteratively, so long lists do not deepen the recursion
    std::vector<Term> items;
    Cell cur = c;
    while (cur.is_str() && cell(cur.address()).id() == syms_->dot && budget > 0) {
      items.push_back(export_rec(cell(cur.address() + 1), names, budget, depth + 1));
      cur = deref(cell(cur.address() + 2));
    }
    Term tail = export_rec(cur, names, budget, depth + 1);
    return make_list(std::move(items), std::move(tail));
  }
  const std::uint32_t n = syms_->functor_arity(f);
  std::vector<Term> args;
  args.reserve(n);
  for (std::uint32_t i = 1; i <= n; ++i) args.push_back(export_rec(cell(s + i), names, budget, depth + 1));
  return Term::compound(syms_->functor_name(f), std::move(args));
}

Term Machine::export_term(Cell c) const {
  ExportNames names;
  std::size_t budget = kExportBudget;
  return export_rec(c, names, budget, 0);
}

Bindings Machine::answer(const Query& q) const {
  Bindings out;
  ExportNames names;
  std::size_t budget = kExportBudget;
  const Address rec = heap_address(0);
  for (std::size_t i = 0; i < q.var_names.size(); ++i)
    out.emplace_back(q.var_names[i], export_rec(cell(rec + 1 + i), names, budget, 0));
  return out;
}

std::uint64_t solve(const Program& program, const Query& q, SolveMode mode,
                    const std::function<void(const Machine&)>& sink, StackCapacity cap,
                    MachineStats* stats) {
  Machine m(program, 0, cap);
  m.start(q);
  std::uint64_t count = 0;
  while (m.run() == Machine::Event::solution) {
    ++count;
    if (sink) sink(m);
    if (mode == SolveMode::first) break;
  }
  if (stats) *stats = m.stats();
  return count;
}

}  // namespace thor
