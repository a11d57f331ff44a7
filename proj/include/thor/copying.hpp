#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include "thor/machine.hpp"
#include "thor/orframes.hpp"

namespace thor {

enum class CopyMode : std::uint8_t { incremental, full };

// Source segment [begin, end) of one stack. Destination offsets equal source
// offsets; delta translates a giver address into the receiver's space.
struct StackRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::int64_t delta = 0;

  std::size_t size() const { return end - begin; }
};

struct CopyDelta {
  StackRange heap, choice, trail;
  OrFrame* common = nullptr;
  bool full = false;
  Address src_heap_base = 0, src_trail_base = 0;

  std::size_t cells() const { return heap.size() + choice.size() + trail.size(); }
};

struct CopyStats {
  std::size_t cells_copied = 0;     // heap cells + choice points + trail entries
  std::size_t full_equivalent = 0;  // what a full copy of the same state moves
  std::size_t adjust_visits = 0;
  std::size_t dangling = 0;
  std::size_t installs = 0;
};

class CopyError : public EngineError {
 public:
  using EngineError::EngineError;
};

// Ranges between the common frame's saved tops (or the stack origins) and
// p's current tops. Throws if q's stacks cannot hold them.
CopyDelta compute_deltas(const Machine& p, const Machine& q, OrFrame* common, CopyMode mode);

// Verbatim segment copy plus p's registers; no cell is interpreted.
void copy_stacks(const Machine& p, Machine& q, const CopyDelta& d);

// Installs into q the values of cells older than the common node that p
// bound after it. Returns the number of installed cells.
std::size_t copy_trailed_entries(Machine& q, const Machine& p, const CopyDelta& d);

// Translates every address inside q's copied segments and its continuation
// register; one pass per stack.
void adjust_stacks(Machine& q, const CopyDelta& d, CopyStats& stats);

// Live cells a full copy of w would move.
inline std::size_t live_cells(const Machine& w) {
  return w.heap_top() + w.choice_top() + w.trail_top();
}

// Whole transfer from p to q with q already at `common`, done in one thread.
CopyStats transfer(const Machine& p, Machine& q, OrFrame* common, CopyMode mode);

}  // namespace thor
