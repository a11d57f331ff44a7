#include "thor/orframes.hpp"

namespace thor {

OrFrame* FramePool::acquire() {
  std::lock_guard guard(mutex_);
  OrFrame* f;
  if (!free_.empty()) {
    f = free_.back();
    free_.pop_back();
  } else {
    all_.push_back(std::make_unique<OrFrame>());
    f = all_.back().get();
    f->lock.set_policy(policy_);
  }
  f->serial = next_serial_++;
  live_.fetch_add(1, std::memory_order_acq_rel);
  return f;
}

void FramePool::release(OrFrame* f) {
  std::lock_guard guard(mutex_);
  free_.push_back(f);
  live_.fetch_sub(1, std::memory_order_acq_rel);
}

std::size_t FramePool::allocated() const {
  std::lock_guard guard(mutex_);
  return all_.size();
}

OrFrame* share_private_nodes(Machine& p, unsigned p_id, unsigned q_id, OrFrame* common,
                             FramePool& pool, FrameLog* log) {
  const std::uint64_t q_bit = worker_bit(q_id);
  for (OrFrame* f = p.youngest_public(); f != common && f != nullptr; f = f->parent) {
    f->lock.lock();
    f->members.fetch_or(q_bit, std::memory_order_acq_rel);
    f->lock.unlock();
  }
  const std::uint64_t both = worker_bit(p_id) | q_bit;
  OrFrame* parent = p.youngest_public();
  for (std::size_t i = p.public_count(); i < p.choice_top(); ++i) {
    ChoicePoint& cp = p.choice_point(i);
    OrFrame* f = pool.acquire();
    f->pred = cp.pred;
    f->next_alt.store(cp.alt, std::memory_order_relaxed);
    f->first_alt = cp.alt;
    f->end_alt = static_cast<std::uint32_t>(p.program().predicate(cp.pred).clauses.size());
    f->members.store(both, std::memory_order_release);
    node_offset_set(*f, i);
    f->parent = parent;
    f->depth = parent ? parent->depth + 1 : 1;
    if (log) log->created.push_back({f->serial, f->first_alt, f->end_alt});
    cp.alt = kGetwork;
    cp.or_frame = f;
    cp.lub = 0;
    parent = f;
  }
  p.set_public_count(p.choice_top());
  p.set_youngest_public(parent);
  p.publish_load();
  return parent;
}

std::optional<std::uint32_t> getwork(OrFrame& f, FrameLog* log) {
  std::optional<std::uint32_t> r;
  f.lock.lock();
  const std::uint32_t next = f.next_alt.load(std::memory_order_relaxed);
  if (next < f.end_alt) {
    r = next;
    f.next_alt.store(next + 1, std::memory_order_release);
  }
  f.lock.unlock();
  if (r && log) log->dispatched.push_back({f.serial, *r});
  return r;
}

OrFrame* leave_frame(Machine& w, unsigned w_id, FramePool& pool) {
  OrFrame* f = w.youngest_public();
  OrFrame* parent = f->parent;  // f may be recycled once we are out
  f->lock.lock();
  const std::uint64_t rest =
      f->members.fetch_and(~worker_bit(w_id), std::memory_order_acq_rel) & ~worker_bit(w_id);
  f->lock.unlock();
  w.restore_to(w.choice_top() - 1);
  w.pop_choice_point();
  w.set_youngest_public(parent);
  if (rest == 0) pool.release(f);
  return parent;
}

bool untried_above(const OrFrame* f) {
  for (; f != nullptr; f = f->parent)
    if (f->has_untried()) return true;
  return false;
}

OrFrame* youngest_common_frame(OrFrame* chain, unsigned p_id) {
  for (OrFrame* f = chain; f != nullptr; f = f->parent)
    if (f->has_member(p_id)) return f;
  return nullptr;
}

}  // namespace thor
