#include "thor/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "thor/reader.hpp"

#ifndef THOR_PROGRAMS_DIR
#define THOR_PROGRAMS_DIR "programs"
#endif

namespace thor {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string join_path(const std::string& dir, const std::string& file) {
  if (dir.empty()) return file;
  return dir.back() == '/' ? dir + file : dir + "/" + file;
}

std::string format_solution(const Solution& s) {
  if (s.bindings.empty()) return "true";
  std::string line;
  for (const auto& [name, value] : s.bindings) {
    if (!line.empty()) line += ", ";
    line += name + " = " + to_string(value);
  }
  return line;
}

}  // namespace

std::string default_programs_dir() {
  if (const char* env = std::getenv("THOR_PROGRAMS")) return env;
  return THOR_PROGRAMS_DIR;
}

std::vector<BenchmarkSpec> load_manifest(const std::string& programs_dir) {
  const std::string path = join_path(programs_dir, "manifest.txt");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<BenchmarkSpec> out;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
      const auto bar = line.find(" | ", start);
      if (bar == std::string::npos) break;
      fields.push_back(trim(line.substr(start, bar - start)));
      start = bar + 3;
    }
    fields.push_back(trim(line.substr(start)));
    if (fields.size() != 4) throw std::runtime_error("malformed manifest line: " + line);
    out.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return out;
}

std::vector<unsigned> parse_worker_list(const std::string& text) {
  std::vector<unsigned> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty() || v < 1 || v > kMaxWorkers)
      throw std::invalid_argument("bad worker count '" + item + "' (expected 1..64)");
    out.push_back(static_cast<unsigned>(v));
  }
  if (out.empty()) throw std::invalid_argument("empty worker list");
  return out;
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    PredicateTable table = consult_file(opts.file);
    Program program(table);
    const Query q = program.compile_query(parse_goal(opts.goal));
    TeamConfig cfg = opts.team;
    cfg.workers = opts.workers;
    TeamResult r = run_team(program, q, cfg);
    std::sort(r.solutions.begin(), r.solutions.end(),
              [](const Solution& a, const Solution& b) { return a.sequence < b.sequence; });
    for (const auto& s : r.solutions) out << format_solution(s) << "\n";
    if (r.solutions.empty()) out << "false\n";
    const RunStats& st = r.stats;
    out << "% " << r.solutions.size() << " solution" << (r.solutions.size() == 1 ? "" : "s")
        << " in " << std::fixed << std::setprecision(3) << st.wall_s << " s, " << cfg.workers
        << " worker" << (cfg.workers == 1 ? "" : "s") << ", " << st.sharing_ops()
        << " sharing ops, " << st.cells_copied() << " cells copied\n";
    out.unsetf(std::ios::floatfield);
    if (opts.stats) {
      for (std::size_t i = 0; i < st.workers.size(); ++i) {
        const WorkerStats& w = st.workers[i];
        out << "% worker " << i << ": calls " << w.calls << ", alternatives " << w.alternatives
            << ", given " << w.shares_given << ", received " << w.shares_received
            << ", cells copied " << w.cells_copied << " (full " << w.full_copy_cells << ")"
            << ", installs " << w.installs << ", getwork " << w.getwork_calls << ", idle "
            << std::fixed << std::setprecision(1) << w.idle_ms << " ms\n";
        out.unsetf(std::ios::floatfield);
      }
    }
    return r.solutions.empty() ? 1 : 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const std::string dir = opts.programs_dir.empty() ? default_programs_dir() : opts.programs_dir;
    const auto manifest = load_manifest(dir);
    std::vector<BenchmarkSpec> chosen;
    if (opts.suite.empty()) {
      chosen = manifest;
    } else {
      for (const auto& name : opts.suite) {
        auto it = std::find_if(manifest.begin(), manifest.end(),
                               [&](const BenchmarkSpec& b) { return b.name == name; });
        if (it == manifest.end()) throw std::invalid_argument("unknown benchmark '" + name + "'");
        chosen.push_back(*it);
      }
    }
    if (opts.repeat < 1) throw std::invalid_argument("--repeat must be at least 1");

    std::ofstream csv;
    if (!opts.csv.empty()) {
      csv.open(opts.csv);
      if (!csv) throw std::runtime_error("cannot write " + opts.csv);
      csv << "benchmark,workers,run,mode,copy,time_s,solutions,sharing_ops,cells_copied,idle_ms\n";
    }
    const char* mode = opts.team.mode == SolveMode::all ? "all" : "first";
    const char* copy = opts.team.copy == CopyMode::full ? "full" : "incremental";

    out << std::left << std::setw(11) << "benchmark" << std::right << std::setw(8) << "workers"
        << std::setw(11) << "time_s" << std::setw(11) << "seq_s" << std::setw(10) << "overhead"
        << std::setw(9) << "speedup" << std::setw(8) << "vs_1" << std::setw(11) << "solutions"
        << std::setw(9) << "shares" << "\n";

    int status = 0;
    for (const auto& b : chosen) {
      PredicateTable table = consult_file(join_path(dir, b.file));
      Program program(table);
      const Query q = program.compile_query(parse_goal(b.goal));

      std::vector<RunStats> baseline;
      std::uint64_t expected = 0;
      for (unsigned r = 0; r < opts.repeat; ++r) {
        TeamResult res = run_sequential(program, q, opts.team.mode, opts.team.stacks, false);
        expected = res.stats.solutions_collected;
        if (csv.is_open())
          csv << b.name << ",0," << r << "," << mode << ",none," << res.stats.wall_s << ","
              << expected << ",0,0,0\n";
        baseline.push_back(std::move(res.stats));
      }

      std::map<unsigned, std::vector<RunStats>> by_workers;
      for (unsigned n : opts.workers) {
        auto& runs = by_workers[n];
        for (unsigned r = 0; r < opts.repeat; ++r) {
          TeamConfig cfg = opts.team;
          cfg.workers = n;
          cfg.keep_solutions = false;
          TeamResult res = run_team(program, q, cfg);
          const RunStats& st = res.stats;
          const bool counts_differ = opts.team.mode == SolveMode::all
                                         ? st.solutions_collected != expected
                                         : (st.solutions_collected == 0) != (expected == 0);
          if (counts_differ) {
            err << "warning: " << b.name << " with " << n << " workers found "
                << st.solutions_collected << " solutions, sequential found " << expected << "\n";
            status = 1;
          }
          if (csv.is_open())
            csv << b.name << "," << n << "," << r << "," << mode << "," << copy << ","
                << st.wall_s << "," << st.solutions_collected << "," << st.sharing_ops() << ","
                << st.cells_copied() << "," << st.idle_ms() << "\n";
          runs.push_back(std::move(res.stats));
        }
      }

      const std::vector<RunStats>* team1 = by_workers.contains(1) ? &by_workers[1] : nullptr;
      for (unsigned n : opts.workers) {
        const auto& runs = by_workers[n];
        const SpeedupRecord s = stats_report(runs, baseline, team1 ? *team1 : std::vector<RunStats>{});
        double shares = 0;
        for (const auto& r : runs) shares += static_cast<double>(r.sharing_ops());
        shares /= static_cast<double>(runs.size());
        out << std::left << std::setw(11) << b.name << std::right << std::setw(8) << n
            << std::fixed << std::setprecision(3) << std::setw(11) << s.team_s << std::setw(11)
            << s.sequential_s << std::setprecision(2) << std::setw(10);
        if (team1) out << s.overhead;
        else out << "-";
        out << std::setw(9) << s.speedup << std::setw(8);
        if (team1) out << s.speedup_vs_team1;
        else out << "-";
        out << std::setw(11) << runs.front().solutions_collected << std::setprecision(1)
            << std::setw(9) << shares << "\n";
        if (opts.stats) {
          double cells = 0, full = 0, installs = 0, idle = 0, getwork = 0;
          for (const auto& r : runs)
            for (const auto& w : r.workers) {
              cells += static_cast<double>(w.cells_copied);
              full += static_cast<double>(w.full_copy_cells);
              installs += static_cast<double>(w.installs);
              idle += w.idle_ms;
              getwork += static_cast<double>(w.getwork_calls);
            }
          const double k = static_cast<double>(runs.size());
          out << std::setprecision(0) << "  % per run: cells copied " << cells / k << " (full "
              << full / k << "), installs " << installs / k << ", getwork " << getwork / k
              << std::setprecision(1) << ", idle " << idle / k << " ms\n";
        }
        out.unsetf(std::ios::floatfield);
      }
    }
    return status;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

namespace {

struct CommonFlags {
  std::string workers;
  std::string mode = "all";
  std::string copy = "incremental";
  std::string wait = "spin";
  std::string move = "nearest";
  std::int64_t delta = 1;
  std::optional<std::uint64_t> seed;
  std::size_t heap = StackCapacity{}.heap;
  std::size_t cps = StackCapacity{}.choice;
  std::size_t trail = StackCapacity{}.trail;
};

void add_common(CLI::App& app, CommonFlags& f) {
  app.add_option("--workers", f.workers, "worker counts, e.g. 1,2,4 (default $THOR_WORKERS or 1)");
  app.add_option("--mode", f.mode, "all | first")->check(CLI::IsMember({"all", "first"}));
  app.add_option("--copy", f.copy, "incremental | full")
      ->check(CLI::IsMember({"incremental", "full"}));
  app.add_option("--wait", f.wait, "spin | block")->check(CLI::IsMember({"spin", "block"}));
  app.add_option("--move", f.move, "nearest | all-below")
      ->check(CLI::IsMember({"nearest", "all-below"}));
  app.add_option("--delta", f.delta, "least load a worker must have to share")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", f.seed, "randomise victim choice with this seed");
  app.add_option("--heap", f.heap, "heap cells per worker")->check(CLI::PositiveNumber);
  app.add_option("--cps", f.cps, "choice points per worker")->check(CLI::PositiveNumber);
  app.add_option("--trail", f.trail, "trail entries per worker")->check(CLI::PositiveNumber);
}

TeamConfig to_team_config(const CommonFlags& f) {
  TeamConfig cfg;
  cfg.mode = f.mode == "first" ? SolveMode::first : SolveMode::all;
  cfg.copy = f.copy == "full" ? CopyMode::full : CopyMode::incremental;
  cfg.sched.wait = f.wait == "block" ? WaitPolicy::block : WaitPolicy::spin;
  cfg.sched.move = f.move == "all-below" ? MoveStrategy::all_below : MoveStrategy::nearest;
  cfg.sched.delta = f.delta;
  if (f.seed) {
    cfg.sched.random_victim = true;
    cfg.sched.seed = *f.seed;
  }
  cfg.stacks = {f.heap, f.cps, f.trail};
  return cfg;
}

std::vector<unsigned> workers_or_default(const std::string& flag) {
  if (!flag.empty()) return parse_worker_list(flag);
  if (const char* env = std::getenv("THOR_WORKERS"); env && *env) return parse_worker_list(env);
  return {1};
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Or-parallel Horn clause engine"};
  app.require_subcommand(1);

  RunOptions run;
  CommonFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "solve a goal against a program file");
  run_cmd->add_option("file", run.file, "program file")->required();
  run_cmd->add_option("--goal", run.goal, "goal to solve")->required();
  run_cmd->add_flag("--stats", run.stats, "per-worker statistics");
  add_common(*run_cmd, run_flags);

  BenchOptions bench;
  CommonFlags bench_flags;
  std::string suite;
  CLI::App* bench_cmd = app.add_subcommand("bench", "time the bundled benchmarks");
  bench_cmd->add_option("--suite", suite, "comma-separated benchmark names (default: all)");
  bench_cmd->add_option("--repeat", bench.repeat, "runs per configuration")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--csv", bench.csv, "write every run to this CSV file");
  bench_cmd->add_option("--programs", bench.programs_dir, "directory holding manifest.txt");
  bench_cmd->add_flag("--stats", bench.stats, "copy and idle figures per configuration");
  add_common(*bench_cmd, bench_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    const auto* sub = run_cmd->parsed() ? run_cmd : bench_cmd->parsed() ? bench_cmd : &app;
    err << "error: " << e.what() << "\n" << sub->help();
    return 2;
  }

  try {
    if (run_cmd->parsed()) {
      run.team = to_team_config(run_flags);
      const auto workers = workers_or_default(run_flags.workers);
      if (workers.size() != 1) throw std::invalid_argument("run takes a single worker count");
      run.workers = workers.front();
      return cmd_run(run, out, err);
    }
    bench.team = to_team_config(bench_flags);
    bench.workers = workers_or_default(bench_flags.workers);
    if (!suite.empty()) {
      std::stringstream ss(suite);
      std::string name;
      while (std::getline(ss, name, ','))
        if (!trim(name).empty()) bench.suite.push_back(trim(name));
    }
    return cmd_bench(bench, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace thor
