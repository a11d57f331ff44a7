#include "thor/copying.hpp"

#include <algorithm>

namespace thor {

namespace {

std::int64_t base_delta(Address to, Address from) {
  return static_cast<std::int64_t>(to) - static_cast<std::int64_t>(from);
}

Address shift(Address a, std::int64_t delta) {
  return static_cast<Address>(static_cast<std::int64_t>(a) + delta);
}

// Relocates giver addresses; anything else is counted as dangling.
struct Relocator {
  Address p_base;
  std::size_t p_top;
  std::int64_t delta;
  std::size_t* dangling;

  Address operator()(Address a) const { return translate(a, a - p_base < p_top); }
  // saved tops may point one past the last live slot
  Address top(Address a) const { return translate(a, a - p_base <= p_top); }

  Address translate(Address a, bool in_range) const {
    if (a < p_base || !in_range) {
      ++*dangling;
      return a;
    }
    return shift(a, delta);
  }
};

}  // namespace

CopyDelta compute_deltas(const Machine& p, const Machine& q, OrFrame* common, CopyMode mode) {
  CopyDelta d;
  d.common = common;
  d.full = mode == CopyMode::full || common == nullptr;
  if (!d.full) {
    const ChoicePoint& cp = p.choice_point(common->node);
    d.heap.begin = cp.heap_top - p.heap_base();
    d.trail.begin = cp.trail_top - p.trail_base();
    d.choice.begin = common->node + 1;
  }
  d.heap.end = p.heap_top();
  d.trail.end = p.trail_top();
  d.choice.end = p.choice_top();
  d.src_heap_base = p.heap_base();
  d.src_trail_base = p.trail_base();
  d.heap.delta = base_delta(q.heap_base(), p.heap_base());
  d.choice.delta = base_delta(q.choice_base(), p.choice_base());
  d.trail.delta = base_delta(q.trail_base(), p.trail_base());
  const StackCapacity& cap = q.capacity();
  if (d.heap.end > cap.heap || d.choice.end > cap.choice || d.trail.end > cap.trail)
    throw CopyError(ErrorKind::resource, "receiver stack overflow during sharing");
  return d;
}

void copy_stacks(const Machine& p, Machine& q, const CopyDelta& d) {
  std::copy(p.heap_cells().begin() + d.heap.begin, p.heap_cells().begin() + d.heap.end,
            q.heap_cells().begin() + d.heap.begin);
  std::copy(p.choice_points().begin() + d.choice.begin,
            p.choice_points().begin() + d.choice.end, q.choice_points().begin() + d.choice.begin);
  std::copy(p.trail_entries().begin() + d.trail.begin, p.trail_entries().begin() + d.trail.end,
            q.trail_entries().begin() + d.trail.begin);
  q.set_tops(d.heap.end, d.trail.end, d.choice.end);
  q.set_public_count(p.public_count());
  q.set_youngest_public(p.youngest_public());
  q.set_continuation(p.continuation());
}

std::size_t copy_trailed_entries(Machine& q, const Machine& p, const CopyDelta& d) {
  if (d.full) return 0;
  std::size_t installs = 0;
  const Address old_limit = p.heap_address(d.heap.begin);
  const auto trail = p.trail_entries();
  for (std::size_t i = d.trail.begin; i < d.trail.end; ++i) {
    const Address a = trail[i];
    if (a >= old_limit) continue;
    Cell v = p.cell(a);
    if (v.holds_address()) v = v.with_address(shift(v.address(), d.heap.delta));
    q.cell(shift(a, d.heap.delta)) = v;
    ++installs;
  }
  return installs;
}

void adjust_stacks(Machine& q, const CopyDelta& d, CopyStats& stats) {
  const Relocator heap{d.src_heap_base, d.heap.end, d.heap.delta, &stats.dangling};
  const Relocator trail{d.src_trail_base, d.trail.end, d.trail.delta, &stats.dangling};

  std::size_t visits = 0;
  auto cells = q.heap_cells();
  for (std::size_t i = d.heap.begin; i < d.heap.end; ++i, ++visits) {
    Cell& c = cells[i];
    if (c.holds_address()) c = c.with_address(heap(c.address()));
  }
  auto cps = q.choice_points();
  for (std::size_t i = d.choice.begin; i < d.choice.end; ++i, ++visits) {
    ChoicePoint& cp = cps[i];
    cp.heap_top = heap.top(cp.heap_top);
    cp.goal = heap(cp.goal);
    cp.trail_top = trail.top(cp.trail_top);
  }
  auto entries = q.trail_entries();
  for (std::size_t i = d.trail.begin; i < d.trail.end; ++i, ++visits)
    entries[i] = heap(entries[i]);

  const Cell cont = q.continuation();
  if (cont.holds_address()) q.set_continuation(cont.with_address(heap(cont.address())));
  // saved tops of the copied choice points were translated in place; refresh
  // the receiver's cached boundary
  q.set_tops(d.heap.end, d.trail.end, d.choice.end);
  stats.adjust_visits += visits;
}

CopyStats transfer(const Machine& p, Machine& q, OrFrame* common, CopyMode mode) {
  CopyStats s;
  const CopyDelta d = compute_deltas(p, q, common, mode);
  copy_stacks(p, q, d);
  s.installs = copy_trailed_entries(q, p, d);
  adjust_stacks(q, d, s);
  s.cells_copied = d.cells();
  s.full_equivalent = d.heap.end + d.choice.end + d.trail.end;
  return s;
}

}  // namespace thor
