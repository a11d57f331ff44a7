#include "thor/scheduler.hpp"

#include <algorithm>
#include <thread>

namespace thor {

Team::Team(unsigned n, SchedulerConfig cfg, CopyMode copy_mode, bool log)
    : config(cfg),
      copy(copy_mode),
      log_frames(log),
      board(n),
      machines(n, nullptr),
      pool(cfg.wait),
      idle_at_root(n - 1) {}

void Team::request_stop() {
  stop.store(true, std::memory_order_release);
  for (auto& b : board) b.parker.unpark();
}

Worker::Worker(Team& team, unsigned id, Machine& m)
    : team_(team),
      id_(id),
      m_(m),
      counted_at_root_(id != 0),
      rng_(team.config.seed * 0x9e3779b97f4a7c15ull + id) {
  m_.set_hook(this);
  m_.set_load_sink(&self().load);
  self().at_root.store(counted_at_root_, std::memory_order_release);
}

bool Worker::on_choice_point(Machine&) {
  poll_requests();
  return team_.stopping();
}

void Worker::set_busy(bool busy) { self().busy.store(busy, std::memory_order_release); }

void Worker::pause(unsigned& spins) {
  if (team_.config.wait == WaitPolicy::block) {
    self().parker.park_for(team_.config.poll_period);
    return;
  }
  if (++spins % 64 == 0) std::this_thread::yield();
  else cpu_relax();
}

void Worker::poll_requests() {
  auto& inbound = self().inbound;
  int q = inbound.load(std::memory_order_acquire);
  if (q < 0) return;
  if (!inbound.compare_exchange_strong(q, kTaken, std::memory_order_acq_rel)) return;
  if (m_.load() >= team_.config.delta && !team_.stopping()) p_share(static_cast<unsigned>(q));
  else refuse(static_cast<unsigned>(q));
  inbound.store(kNoRequest, std::memory_order_release);
}

void Worker::refuse(unsigned q) {
  BoardEntry& qb = team_.board[q];
  qb.signal.transition(Signal::sharing_request, Signal::refused);
  qb.parker.unpark();
  ++stats.refusals;
}

void Worker::p_share(unsigned q) {
  BoardEntry& qb = team_.board[q];
  // q is blocked on its request, so its frame chain is stable
  OrFrame* q_at = team_.machines[q]->youngest_public();
  OrFrame* common = youngest_common_frame(q_at, id_);
  if (common != q_at) {
    // q would have to abandon frames it may still owe work to
    refuse(q);
    return;
  }
  share_private_nodes(m_, id_, q, common, team_.pool, team_.log_frames ? &frame_log : nullptr);
  qb.giver = static_cast<int>(id_);
  qb.common = common;
  qb.signal.transition(Signal::sharing_request, Signal::nodes_shared);
  qb.parker.unpark();
  ++stats.shares_given;
  // our inbound slot stays taken, so nobody can queue behind this wait
  unsigned spins = 0;
  while (qb.signal.load() != Signal::ready) pause(spins);
}

void Worker::q_share(unsigned p, OrFrame* common) {
  BoardEntry& me = self();
  const Machine& pm = *team_.machines[p];
  CopyStats cs;
  CopyDelta d;
  try {
    d = compute_deltas(pm, m_, common, team_.copy);
    copy_stacks(pm, m_, d);
    cs.installs = copy_trailed_entries(m_, pm, d);
  } catch (...) {
    me.signal.transition(Signal::nodes_shared, Signal::ready);
    team_.board[p].parker.unpark();
    throw;
  }
  if (counted_at_root_) {
    counted_at_root_ = false;
    me.at_root.store(false, std::memory_order_release);
    team_.idle_at_root.fetch_sub(1, std::memory_order_acq_rel);
  }
  me.signal.transition(Signal::nodes_shared, Signal::ready);
  team_.board[p].parker.unpark();

  adjust_stacks(m_, d, cs);
  cs.cells_copied = d.cells();
  cs.full_equivalent = d.heap.end + d.choice.end + d.trail.end;
  shares.push_back({p, id_, d.full, cs});
  ++stats.shares_received;
  stats.cells_copied += cs.cells_copied;
  stats.full_copy_cells += cs.full_equivalent;
  stats.installs += cs.installs;
}

Worker::Reply Worker::request(unsigned victim) {
  BoardEntry& me = self();
  BoardEntry& vb = team_.board[victim];
  me.signal.transition(Signal::ready, Signal::sharing_request);
  int expected = kNoRequest;
  if (!vb.inbound.compare_exchange_strong(expected, static_cast<int>(id_),
                                          std::memory_order_acq_rel)) {
    me.signal.transition(Signal::sharing_request, Signal::ready);
    return Reply::unavailable;
  }
  vb.parker.unpark();
  unsigned spins = 0;
  for (;;) {
    const Signal s = me.signal.load();
    if (s == Signal::nodes_shared) {
      q_share(static_cast<unsigned>(me.giver), me.common);
      return Reply::shared;
    }
    if (s == Signal::refused) {
      me.signal.transition(Signal::refused, Signal::ready);
      return Reply::refused;
    }
    // two idle workers asking each other must both get an answer
    poll_requests();
    if (team_.stopping()) {
      int mine = static_cast<int>(id_);
      if (vb.inbound.compare_exchange_strong(mine, kNoRequest, std::memory_order_acq_rel)) {
        me.signal.transition(Signal::sharing_request, Signal::ready);
        return Reply::stopped;
      }
      // already taken: the giver answers before it can stop
    }
    pause(spins);
  }
}

std::vector<unsigned> Worker::search_for_work(OrFrame* at) {
  std::vector<unsigned> out;
  for (unsigned w = 0; w < team_.size(); ++w) {
    if (w == id_) continue;
    const BoardEntry& b = team_.board[w];
    if (!b.busy.load(std::memory_order_acquire)) continue;
    if (b.load.load(std::memory_order_relaxed) < team_.config.delta) continue;
    if (at && !at->has_member(w)) continue;
    out.push_back(w);
  }
  if (team_.config.random_victim) std::shuffle(out.begin(), out.end(), rng_);
  return out;
}

bool Worker::should_stay(OrFrame* at) const {
  bool any = false, all = true;
  for (unsigned w = 0; w < team_.size(); ++w) {
    if (w == id_ || !team_.board[w].busy.load(std::memory_order_acquire)) continue;
    if (at->has_member(w)) any = true;
    else all = false;
  }
  return team_.config.move == MoveStrategy::nearest ? any : any && all;
}

bool Worker::try_candidates(const std::vector<unsigned>& candidates) {
  for (unsigned v : candidates) {
    switch (request(v)) {
      case Reply::shared:
        return true;
      case Reply::stopped:
        return false;
      default:
        break;
    }
  }
  return false;
}

bool Worker::detect_termination() {
  const unsigned n = team_.size();
  if (team_.idle_at_root.load(std::memory_order_acquire) != n) return false;
  for (const auto& b : team_.board)
    if (b.busy.load(std::memory_order_acquire)) return false;
  return team_.idle_at_root.load(std::memory_order_acquire) == n;
}

bool Worker::find_work() {
  set_busy(false);
  const auto t0 = std::chrono::steady_clock::now();
  auto idle_done = [&] {
    stats.idle_ms +=
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };
  FrameLog* log = team_.log_frames ? &frame_log : nullptr;
  unsigned spins = 0;
  for (;;) {
    if (team_.stopping()) {
      idle_done();
      return false;
    }
    poll_requests();
    OrFrame* f = m_.youngest_public();
    if (f) {
      m_.restore_to(m_.choice_top() - 1);
      ++stats.getwork_calls;
      if (auto alt = getwork(*f, log)) {
        set_busy(true);
        idle_done();
        m_.resume_alternative(*alt);
        return true;
      }
      // public work left above is taken before asking anyone to share
      if (!untried_above(f->parent) && should_stay(f)) {
        if (!try_candidates(search_for_work(f))) pause(spins);
        continue;
      }
      leave_frame(m_, id_, team_.pool);
      continue;
    }
    if (!counted_at_root_) {
      counted_at_root_ = true;
      self().at_root.store(true, std::memory_order_release);
      team_.idle_at_root.fetch_add(1, std::memory_order_acq_rel);
    }
    if (detect_termination()) {
      team_.request_stop();
      idle_done();
      return false;
    }
    if (!try_candidates(search_for_work(nullptr))) pause(spins);
  }
}

void Worker::leave_all_frames() {
  while (m_.choice_top() > m_.public_count()) m_.pop_choice_point();
  while (m_.youngest_public()) leave_frame(m_, id_, team_.pool);
  m_.reset_to_root();
}

}  // namespace thor
