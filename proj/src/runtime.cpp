#include "thor/runtime.hpp"

#include <chrono>
#include <exception>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace thor {

std::uint64_t RunStats::sharing_ops() const {
  std::uint64_t n = 0;
  for (const auto& w : workers) n += w.shares_received;
  return n;
}

std::uint64_t RunStats::cells_copied() const {
  std::uint64_t n = 0;
  for (const auto& w : workers) n += w.cells_copied;
  return n;
}

std::uint64_t RunStats::alternatives() const {
  std::uint64_t n = 0;
  for (const auto& w : workers) n += w.alternatives;
  return n;
}

std::uint64_t RunStats::calls() const {
  std::uint64_t n = 0;
  for (const auto& w : workers) n += w.calls;
  return n;
}

double RunStats::idle_ms() const {
  double t = 0;
  for (const auto& w : workers) t += w.idle_ms;
  return t;
}

Collector::Collector(std::size_t capacity, bool keep)
    : capacity_(capacity ? capacity : 1), keep_(keep), thread_([this] { drain(); }) {}

Collector::~Collector() { close(); }

void Collector::push(Solution s) {
  std::unique_lock lk(mutex_);
  not_full_.wait(lk, [&] { return queue_.size() < capacity_; });
  queue_.push_back(std::move(s));
  lk.unlock();
  not_empty_.notify_one();
}

void Collector::close() {
  {
    std::lock_guard lk(mutex_);
    closed_ = true;
  }
  not_empty_.notify_one();
  if (thread_.joinable()) thread_.join();
}

void Collector::drain() {
  std::unique_lock lk(mutex_);
  for (;;) {
    not_empty_.wait(lk, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return;
    Solution s = std::move(queue_.front());
    queue_.pop_front();
    lk.unlock();
    not_full_.notify_one();
    s.sequence = collected_++;
    if (keep_) out_.push_back(std::move(s));
    lk.lock();
  }
}

namespace {

void fold_machine_stats(WorkerStats& w, const MachineStats& m) {
  w.calls = m.calls;
  w.alternatives = m.alternatives;
  w.choice_points = m.choice_points;
}

}  // namespace

TeamResult run_team(const Program& program, const Query& q, const TeamConfig& cfg) {
  const unsigned n = cfg.workers;
  if (n < 1 || n > kMaxWorkers) throw std::invalid_argument("worker count must be in 1..64");
  if (cfg.sched.delta < 1) throw std::invalid_argument("delta must be at least 1");

  Team team(n, cfg.sched, cfg.copy, cfg.log_dispatch);
  std::vector<std::unique_ptr<Machine>> machines;
  std::vector<std::unique_ptr<Worker>> workers;
  for (unsigned i = 0; i < n; ++i) {
    machines.push_back(std::make_unique<Machine>(program, i, cfg.stacks));
    team.machines[i] = machines.back().get();
  }
  for (unsigned i = 0; i < n; ++i)
    workers.push_back(std::make_unique<Worker>(team, i, *machines[i]));

  const auto t0 = std::chrono::steady_clock::now();
  Collector collector(cfg.queue_capacity, cfg.keep_solutions);
  std::atomic<bool> first_found{false};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::uint64_t> emitted(n, 0);

  auto body = [&](unsigned i) {
    Worker& w = *workers[i];
    Machine& m = *machines[i];
    try {
      bool has_work = false;
      if (i == 0) {
        m.start(q);
        w.set_busy(true);
        has_work = true;
      }
      for (;;) {
        if (!has_work && !w.find_work()) break;
        has_work = true;
        const Machine::Event e = m.run();
        if (e == Machine::Event::solution) {
          if (cfg.mode == SolveMode::first) {
            bool expected = false;
            if (first_found.compare_exchange_strong(expected, true)) {
              collector.push({m.answer(q), i, 0});
              ++emitted[i];
            }
            team.request_stop();
            break;
          }
          collector.push({m.answer(q), i, 0});
          ++emitted[i];
          continue;
        }
        if (e == Machine::Event::halted) break;
        has_work = false;
      }
    } catch (...) {
      errors[i] = std::current_exception();
      team.request_stop();
    }
    w.set_busy(false);
    // answer a request that may have been taken but not yet served
    w.poll_requests();
  };

  std::vector<std::thread> threads;
  for (unsigned i = 1; i < n; ++i) threads.emplace_back(body, i);
  body(0);
  for (auto& t : threads) t.join();
  for (auto& w : workers) w->leave_all_frames();
  collector.close();
  const auto t1 = std::chrono::steady_clock::now();

  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  TeamResult r;
  r.stats.wall_s = std::chrono::duration<double>(t1 - t0).count();
  for (unsigned i = 0; i < n; ++i) {
    Worker& w = *workers[i];
    WorkerStats ws = w.stats;
    fold_machine_stats(ws, machines[i]->stats());
    ws.solutions = emitted[i];
    r.stats.workers.push_back(ws);
    r.stats.shares.insert(r.stats.shares.end(), w.shares.begin(), w.shares.end());
    if (cfg.log_dispatch) r.stats.frame_logs.push_back(std::move(w.frame_log));
    r.stats.solutions_emitted += emitted[i];
    r.stats.illegal_transitions += team.board[i].signal.illegal();
  }
  r.stats.solutions_collected = collector.collected();
  r.stats.frames_live_after = team.pool.live();
  r.solutions = collector.take();
  return r;
}

TeamResult run_sequential(const Program& program, const Query& q, SolveMode mode,
                          StackCapacity stacks, bool keep_solutions) {
  TeamResult r;
  const auto t0 = std::chrono::steady_clock::now();
  MachineStats ms;
  std::uint64_t seq = 0;
  solve(
      program, q, mode,
      [&](const Machine& m) {
        Solution s{m.answer(q), 0, seq++};
        if (keep_solutions) r.solutions.push_back(std::move(s));
      },
      stacks, &ms);
  const auto t1 = std::chrono::steady_clock::now();
  r.stats.wall_s = std::chrono::duration<double>(t1 - t0).count();
  WorkerStats ws;
  fold_machine_stats(ws, ms);
  ws.solutions = seq;
  r.stats.workers.push_back(ws);
  r.stats.solutions_emitted = seq;
  r.stats.solutions_collected = seq;
  return r;
}

double mean_wall(const std::vector<RunStats>& runs) {
  if (runs.empty()) return 0;
  double t = 0;
  for (const auto& r : runs) t += r.wall_s;
  return t / static_cast<double>(runs.size());
}

SpeedupRecord stats_report(const std::vector<RunStats>& team, const std::vector<RunStats>& baseline,
                           const std::vector<RunStats>& team1) {
  SpeedupRecord s;
  s.team_s = mean_wall(team);
  s.sequential_s = mean_wall(baseline);
  s.team1_s = team1.empty() ? s.team_s : mean_wall(team1);
  auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };
  s.speedup = ratio(s.sequential_s, s.team_s);
  s.speedup_vs_team1 = ratio(s.team1_s, s.team_s);
  s.overhead = ratio(s.team1_s, s.sequential_s);
  return s;
}

}  // namespace thor
