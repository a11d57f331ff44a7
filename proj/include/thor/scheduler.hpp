#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

#include "thor/copying.hpp"
#include "thor/machine.hpp"
#include "thor/orframes.hpp"

namespace thor {

enum class MoveStrategy : std::uint8_t { nearest, all_below };

struct SchedulerConfig {
  std::int64_t delta = 1;  // least private load a giver must hold to share
  MoveStrategy move = MoveStrategy::nearest;
  WaitPolicy wait = WaitPolicy::spin;
  std::chrono::microseconds poll_period{100};
  bool random_victim = false;
  std::uint64_t seed = 0;
};

enum class Signal : std::uint8_t { ready, sharing_request, nodes_shared, refused };

// Per-worker handshake state. Every protocol step is a compare-and-set from
// the state the protocol expects; a failed step is counted as illegal.
class SignalSlot {
 public:
  Signal load() const { return static_cast<Signal>(state_.load(std::memory_order_acquire)); }
  bool transition(Signal from, Signal to) {
    auto expected = static_cast<std::uint8_t>(from);
    if (state_.compare_exchange_strong(expected, static_cast<std::uint8_t>(to),
                                       std::memory_order_acq_rel)) {
      return true;
    }
    illegal_.fetch_add(1, std::memory_order_relaxed);
    return false;
  }
  std::uint64_t illegal() const { return illegal_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::uint8_t> state_{static_cast<std::uint8_t>(Signal::ready)};
  std::atomic<std::uint64_t> illegal_{0};
};

class Parker {
 public:
  void park_for(std::chrono::microseconds d) {
    std::unique_lock lk(mutex_);
    cv_.wait_for(lk, d, [&] { return notified_; });
    notified_ = false;
  }
  void unpark() {
    {
      std::lock_guard lk(mutex_);
      notified_ = true;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  bool notified_ = false;
};

inline constexpr int kNoRequest = -1;
inline constexpr int kTaken = -2;

struct alignas(64) BoardEntry {
  std::atomic<std::int64_t> load{0};
  std::atomic<bool> busy{false};
  std::atomic<bool> at_root{true};
  std::atomic<int> inbound{kNoRequest};  // requester id, kNoRequest or kTaken
  SignalSlot signal;
  // handshake payload, written by the giver before nodes_shared
  int giver = -1;
  OrFrame* common = nullptr;
  Parker parker;
};

struct ShareEvent {
  unsigned giver = 0;
  unsigned receiver = 0;
  bool full = false;
  CopyStats copy;
};

struct WorkerStats {
  std::uint64_t calls = 0;
  std::uint64_t alternatives = 0;
  std::uint64_t choice_points = 0;
  std::uint64_t shares_given = 0;
  std::uint64_t shares_received = 0;
  std::uint64_t refusals = 0;
  std::uint64_t cells_copied = 0;
  std::uint64_t full_copy_cells = 0;
  std::uint64_t installs = 0;
  std::uint64_t getwork_calls = 0;
  std::uint64_t solutions = 0;
  double idle_ms = 0;
};

// State shared by the whole team.
struct Team {
  Team(unsigned n, SchedulerConfig cfg, CopyMode copy, bool log_frames);

  unsigned size() const { return static_cast<unsigned>(board.size()); }
  void request_stop();
  bool stopping() const { return stop.load(std::memory_order_acquire); }

  SchedulerConfig config;
  CopyMode copy;
  bool log_frames;
  std::vector<BoardEntry> board;
  std::vector<Machine*> machines;
  FramePool pool;
  std::atomic<bool> stop{false};
  std::atomic<unsigned> idle_at_root{0};
};

// Scheduling side of one worker: request polling, the giving and receiving
// halves of a share, and the idle search.
class Worker : public ChoicePointHook {
 public:
  Worker(Team& team, unsigned id, Machine& m);

  unsigned id() const { return id_; }
  Machine& machine() { return m_; }

  bool on_choice_point(Machine& m) override;

  // Services an inbound request: share if the load allows, refuse otherwise.
  void poll_requests();

  // Runs after the machine stops at a public node or exhausts its branch.
  // Returns true once an alternative has been resumed, false when the team
  // is done.
  bool find_work();

  // Giving half; q's request has been taken.
  void p_share(unsigned q);
  // Receiving half, entered when p has published the shared nodes.
  void q_share(unsigned p, OrFrame* common);

  std::vector<unsigned> search_for_work(OrFrame* at);
  bool should_stay(OrFrame* at) const;
  bool detect_termination();

  void set_busy(bool busy);
  void leave_all_frames();

  WorkerStats stats;
  std::vector<ShareEvent> shares;
  FrameLog frame_log;

 private:
  enum class Reply : std::uint8_t { shared, refused, unavailable, stopped };
  Reply request(unsigned victim);
  bool try_candidates(const std::vector<unsigned>& candidates);
  void refuse(unsigned q);
  void pause(unsigned& spins);
  BoardEntry& self() { return team_.board[id_]; }

  Team& team_;
  unsigned id_;
  Machine& m_;
  bool counted_at_root_;
  std::mt19937_64 rng_;
};

}  // namespace thor
