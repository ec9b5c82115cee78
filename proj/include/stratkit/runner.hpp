#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stratkit/config.hpp"
#include "stratkit/strategy.hpp"

namespace stratkit {

struct RunRecord {
  std::string problem;
  std::string strategy_id;
  bool solved = false;
  double wall_seconds = 0.0;
  double time_limit = 0.0;
  // Nonempty when the run could not be carried out at all (e.g. the solver
  // binary failed to spawn). Such records are reported but never persisted.
  std::string error;

  bool failed() const { return !error.empty(); }
};

// Executes one (strategy, problem) pair under a wall-clock limit.
// Implementations must be callable from multiple worker threads at once.
class Solver {
 public:
  virtual ~Solver() = default;
  virtual RunRecord run(const Strategy& s, const std::string& problem, double limit) = 0;
};

// Spawns the configured solver binary, enforces the limit plus a 0.5 s grace
// period by killing the whole process group, and captures stdout/stderr to a
// per-run log file under log_dir. Success means: exited with status 0, the
// configured success marker (if any) appears in the output, and the run
// finished within the wall-clock limit.
class ProcessSolver : public Solver {
 public:
  ProcessSolver(SolverSpec spec, std::string tmp_dir, std::string log_dir);

  RunRecord run(const Strategy& s, const std::string& problem, double limit) override;

 private:
  SolverSpec spec_;
  std::string tmp_dir_;
  std::string log_dir_;
  std::atomic<long> run_counter_{0};
};

// Table-driven solver stand-in. Runtimes come from a JSON document:
//
//   {"table": [{"problem": "p1", "strategy": "<id>", "time": 2.0}, ...],
//    "unsolvable": [{"problem": "p1", "strategy": "<id>"}, ...],
//    "realtime": false,
//    "invocation_log": "calls.log"}
//
// A tabled pair solves iff its time fits the limit; pairs listed as
// unsolvable, and pairs absent from the table, never solve. With
// "realtime" the mock actually sleeps for the reported wall time, so
// wall-clock assertions hold. "invocation_log" appends one
// `problem<TAB>strategy<TAB>limit` line per call, which lets tests count
// solver invocations across process boundaries.
class MockSolver : public Solver {
 public:
  static std::unique_ptr<MockSolver> from_json(const std::string& text);
  static std::unique_ptr<MockSolver> from_file(const std::string& path);

  RunRecord run(const Strategy& s, const std::string& problem, double limit) override;

  // Fallback for pairs absent from the table; returning a non-finite or
  // non-positive value means unsolvable. Test-only injection point.
  void set_runtime_function(std::function<double(const Strategy&, const std::string&)> fn);

  long invocation_count() const { return invocations_.load(); }

 private:
  std::map<std::pair<std::string, std::string>, double> table_;
  std::set<std::pair<std::string, std::string>> unsolvable_;
  bool realtime_ = false;
  std::string invocation_log_;
  std::function<double(const Strategy&, const std::string&)> runtime_function_;
  std::atomic<long> invocations_{0};
  std::mutex log_mutex_;
};

struct RunJob {
  Strategy strategy;
  std::string problem;
  double limit = 0.0;
};

// Executes jobs on at most `cores` concurrent workers. The result order
// matches the job order regardless of completion order, and one failing job
// never aborts the batch: its record carries the error instead.
std::vector<RunRecord> run_batch(Solver& solver, const std::vector<RunJob>& jobs, int cores);

struct CommandResult {
  int exit_code = -1;
  std::string output;  // combined stdout
};

// Runs an auxiliary command (e.g. a feature extractor) and captures stdout.
// Kills the process group after timeout_seconds. Throws Error(spawn_failure).
CommandResult run_command(const std::vector<std::string>& argv, double timeout_seconds);

}  // namespace stratkit
