#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "thor/runtime.hpp"

namespace thor {

struct BenchmarkSpec {
  std::string name;
  std::string file;  // relative to the programs directory
  std::string goal;
  std::string reduced_goal;
};

// Reads `manifest.txt` from the programs directory.
std::vector<BenchmarkSpec> load_manifest(const std::string& programs_dir);
std::string default_programs_dir();

struct RunOptions {
  std::string file;
  std::string goal;
  unsigned workers = 1;
  TeamConfig team;
  bool stats = false;
};

struct BenchOptions {
  std::vector<std::string> suite;  // empty: every benchmark in the manifest
  std::vector<unsigned> workers{1};
  unsigned repeat = 5;
  std::string csv;
  std::string programs_dir;
  TeamConfig team;
  bool stats = false;
};

std::vector<unsigned> parse_worker_list(const std::string& text);

// Exit status: 0 on success, 1 when no solution was found, 2 on errors.
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);
// Exit status: 0 on success, 1 when runs disagree on solution counts, 2 on errors.
int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);

// Full command line: `run FILE --goal ...` or `bench ...`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace thor
