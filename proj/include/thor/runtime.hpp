#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include "thor/copying.hpp"
#include "thor/machine.hpp"
#include "thor/orframes.hpp"
#include "thor/program.hpp"
#include "thor/scheduler.hpp"

namespace thor {

struct TeamConfig {
  unsigned workers = 1;
  SolveMode mode = SolveMode::all;
  CopyMode copy = CopyMode::incremental;
  SchedulerConfig sched;
  StackCapacity stacks;
  bool log_dispatch = false;
  std::size_t queue_capacity = 4096;
  bool keep_solutions = true;  // false: the collector only counts
};

struct Solution {
  Bindings bindings;
  unsigned worker = 0;
  std::uint64_t sequence = 0;
};

struct RunStats {
  double wall_s = 0;
  std::vector<WorkerStats> workers;
  std::vector<ShareEvent> shares;
  std::vector<FrameLog> frame_logs;  // filled when dispatch logging is on
  std::uint64_t solutions_emitted = 0;
  std::uint64_t solutions_collected = 0;
  std::size_t frames_live_after = 0;
  std::uint64_t illegal_transitions = 0;

  std::uint64_t sharing_ops() const;
  std::uint64_t cells_copied() const;
  std::uint64_t alternatives() const;
  std::uint64_t calls() const;
  double idle_ms() const;
};

struct TeamResult {
  std::vector<Solution> solutions;
  RunStats stats;
};

// Drains solutions from a bounded queue on its own thread and numbers them
// in arrival order. push() blocks while the queue is full.
class Collector {
 public:
  explicit Collector(std::size_t capacity = 4096, bool keep = true);
  ~Collector();
  Collector(const Collector&) = delete;
  Collector& operator=(const Collector&) = delete;

  void push(Solution s);
  // Waits until everything pushed so far is drained, then stops the thread.
  void close();
  std::vector<Solution> take() { return std::move(out_); }
  std::uint64_t collected() const { return collected_; }

 private:
  void drain();

  std::size_t capacity_;
  bool keep_;
  std::mutex mutex_;
  std::condition_variable not_empty_, not_full_;
  std::deque<Solution> queue_;
  bool closed_ = false;
  std::vector<Solution> out_;
  std::uint64_t collected_ = 0;
  std::thread thread_;
};

// Runs `q` on a team of cfg.workers threads; worker 0 starts the query.
TeamResult run_team(const Program& program, const Query& q, const TeamConfig& cfg);

// The plain sequential engine with the same solution snapshots.
TeamResult run_sequential(const Program& program, const Query& q, SolveMode mode,
                          StackCapacity stacks = {}, bool keep_solutions = true);

struct SpeedupRecord {
  double sequential_s = 0;
  double team1_s = 0;
  double team_s = 0;
  double speedup = 0;           // sequential / team
  double speedup_vs_team1 = 0;  // team of 1 / team
  double overhead = 0;          // team of 1 / sequential
};

double mean_wall(const std::vector<RunStats>& runs);

// Averages each series; `team1` may be empty when `team` itself has one worker.
SpeedupRecord stats_report(const std::vector<RunStats>& team, const std::vector<RunStats>& baseline,
                           const std::vector<RunStats>& team1 = {});

}  // namespace thor
