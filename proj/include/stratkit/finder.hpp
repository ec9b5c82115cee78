#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stratkit/config.hpp"
#include "stratkit/runner.hpp"
#include "stratkit/store.hpp"
#include "stratkit/strategy.hpp"
#include "stratkit/util.hpp"

namespace stratkit {

struct FinderConfig {
  double tolerance = 1.0;   // seconds of slack that still triggers local search
  double t_max = 10.0;      // default per-run limit
  int walks = 10;           // random neighbors per local-search step
  int walk_length = 3;      // parameter changes per neighbor
  int cores = 1;
  // Per-problem limit overrides (two-phase reruns verify at the previously
  // best known time instead of the full limit). Problems without an entry
  // run at t_max.
  std::map<std::string, double> limit_overrides;
};

struct Improvement {
  std::string problem;
  std::string strategy_id;
  double old_best = 0.0;
  double new_best = 0.0;
};

struct SearchOutcome {
  // problem -> (winning strategy, its solve time); unsolved problems absent
  std::map<std::string, std::pair<Strategy, double>> best;
  std::vector<Improvement> improvements;  // chronological
  long runs_launched = 0;                 // solver invocations (cache misses)
  long cache_hits = 0;
};

// Runs jobs through the store first: conclusive stored evidence is replayed
// without touching the solver, fresh results are appended to the store.
// Results keep job order. Jobs repeating the same (problem, strategy, limit)
// triple share one run.
std::vector<RunRecord> run_batch_cached(Solver& solver, RunStore& store,
                                        const std::vector<RunJob>& jobs, int cores,
                                        long* launched = nullptr, long* cache_hits = nullptr);

// Stochastic local search for per-problem best strategies: pop a strategy
// off the FIFO queue, run it on every problem, and wherever it comes within
// `tolerance` of the problem's best time, try random mutations of it under
// the incumbent time as the limit; mutations that improve the best time are
// pushed onto the queue. Every strategy touched is registered; every run is
// persisted. A strategy id that was ever enqueued is not enqueued again.
SearchOutcome find_strategies(const std::vector<std::string>& problems,
                              const std::vector<Strategy>& seeds, const FinderConfig& cfg,
                              const ParameterSpace& space, Solver& solver, RunStore& store,
                              StrategyStore& registry, Rng& rng);

// Ids of strategies that, on at least one problem, solved it within
// `tolerance` of the fastest recorded solve. Sorted for determinism.
std::vector<std::string> select_preselected(const std::vector<RunRecord>& run_log,
                                            double tolerance);

// Completes the strategies x problems run matrix at full_limit (cached runs
// are reused). Returns the records in strategies-major order.
std::vector<RunRecord> rerun_full_time(const std::vector<Strategy>& strategies,
                                       const std::vector<std::string>& problems,
                                       double full_limit, Solver& solver, RunStore& store,
                                       int cores);

}  // namespace stratkit
