#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "thor/machine.hpp"

namespace thor {

inline constexpr unsigned kMaxWorkers = 64;

enum class WaitPolicy : std::uint8_t { spin, block };

inline void cpu_relax() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_ia32_pause();
#elif defined(__aarch64__)
  asm volatile("yield");
#endif
}

// Latch guarding one frame: a test-and-test-and-set spin lock, or a mutex
// when idle workers must not burn cycles.
class FrameLock {
 public:
  explicit FrameLock(WaitPolicy policy = WaitPolicy::spin) : policy_(policy) {}
  void set_policy(WaitPolicy p) { policy_ = p; }

  void lock() {
    if (policy_ == WaitPolicy::block) {
      mutex_.lock();
      return;
    }
    while (flag_.exchange(true, std::memory_order_acquire)) {
      while (flag_.load(std::memory_order_relaxed)) cpu_relax();
    }
  }
  void unlock() {
    if (policy_ == WaitPolicy::block) mutex_.unlock();
    else flag_.store(false, std::memory_order_release);
  }

 private:
  WaitPolicy policy_;
  std::atomic<bool> flag_{false};
  std::mutex mutex_;
};

constexpr std::uint64_t worker_bit(unsigned w) { return std::uint64_t{1} << w; }

// Synchronisation record of one public choice point. The alternative cursor
// and member set change only under `lock`; node, parent, depth and serial are
// fixed when the frame is created.
struct OrFrame {
  FrameLock lock;
  std::uint32_t pred = 0;
  std::atomic<std::uint32_t> next_alt{0};  // written under lock, readable without
  std::uint32_t end_alt = 0;
  std::uint32_t first_alt = 0;
  std::atomic<std::uint64_t> members{0};
  std::size_t node = 0;  // choice-point index from the stack origin
  OrFrame* parent = nullptr;
  std::uint32_t depth = 0;
  std::uint64_t serial = 0;

  bool has_untried() const { return next_alt.load(std::memory_order_acquire) < end_alt; }

  bool has_member(unsigned w) const {
    return (members.load(std::memory_order_acquire) & worker_bit(w)) != 0;
  }
};

// Recycles frames through a free list. Frames are never returned to the
// system before the pool dies, so a stale pointer always names some frame.
class FramePool {
 public:
  explicit FramePool(WaitPolicy policy = WaitPolicy::spin) : policy_(policy) {}
  FramePool(const FramePool&) = delete;
  FramePool& operator=(const FramePool&) = delete;

  OrFrame* acquire();
  void release(OrFrame* f);
  std::size_t live() const { return live_.load(std::memory_order_acquire); }
  std::size_t allocated() const;

 private:
  WaitPolicy policy_;
  mutable std::mutex mutex_;
  std::vector<std::unique_ptr<OrFrame>> all_;
  std::vector<OrFrame*> free_;
  std::atomic<std::size_t> live_{0};
  std::uint64_t next_serial_ = 1;
};

struct FrameRecord {
  std::uint64_t serial;
  std::uint32_t first_alt;
  std::uint32_t end_alt;
};

struct DispatchRecord {
  std::uint64_t serial;
  std::uint32_t clause;
};

// Optional per-worker logs; each is written only by its owner.
struct FrameLog {
  std::vector<FrameRecord> created;
  std::vector<DispatchRecord> dispatched;
};

// Publishes every private choice point of p, oldest first, as frames with
// members {p, q}; q also joins p's public frames above `common`. Returns the
// youngest new frame.
OrFrame* share_private_nodes(Machine& p, unsigned p_id, unsigned q_id, OrFrame* common,
                             FramePool& pool, FrameLog* log = nullptr);

// Next untried clause of f, claimed atomically.
std::optional<std::uint32_t> getwork(OrFrame& f, FrameLog* log = nullptr);

// w drops out of its youngest public frame, pops that choice point and
// returns the parent frame (null at root).
OrFrame* leave_frame(Machine& w, unsigned w_id, FramePool& pool);

// True when some frame from `f` up to the root still holds an alternative.
bool untried_above(const OrFrame* f);

// First frame on `chain` (youngest to oldest) that p belongs to, or null.
OrFrame* youngest_common_frame(OrFrame* chain, unsigned p_id);

inline void node_offset_set(OrFrame& f, std::size_t cp_index) { f.node = cp_index; }
inline ChoicePoint& node_offset_get(const OrFrame& f, Machine& w) {
  return w.choice_point(f.node);
}

}  // namespace thor
