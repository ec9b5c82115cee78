#include "stratkit/finder.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>

#include "stratkit/error.hpp"

namespace stratkit {

std::vector<RunRecord> run_batch_cached(Solver& solver, RunStore& store,
                                        const std::vector<RunJob>& jobs, int cores,
                                        long* launched, long* cache_hits) {
  std::vector<RunRecord> results(jobs.size());
  std::vector<char> resolved(jobs.size(), 0);

  // Cache pass; duplicate triples within the batch alias the first instance.
  std::map<std::tuple<std::string, std::string, double>, std::size_t> first_instance;
  std::vector<RunJob> fresh;
  std::vector<std::size_t> fresh_index;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const RunJob& job = jobs[i];
    if (auto cached = store.cached_result(job.problem, job.strategy.id, job.limit)) {
      results[i] = *cached;
      resolved[i] = 1;
      if (cache_hits != nullptr) ++*cache_hits;
      continue;
    }
    const auto key = std::make_tuple(job.problem, job.strategy.id, job.limit);
    const auto it = first_instance.find(key);
    if (it != first_instance.end()) continue;  // filled from the alias below
    first_instance.emplace(key, i);
    fresh.push_back(job);
    fresh_index.push_back(i);
  }

  if (!fresh.empty()) {
    const std::vector<RunRecord> ran = run_batch(solver, fresh, cores);
    for (std::size_t k = 0; k < ran.size(); ++k) {
      results[fresh_index[k]] = ran[k];
      resolved[fresh_index[k]] = 1;
      if (launched != nullptr) ++*launched;
      if (!ran[k].failed()) store.append(ran[k]);
    }
  }

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (resolved[i]) continue;
    const auto key = std::make_tuple(jobs[i].problem, jobs[i].strategy.id, jobs[i].limit);
    results[i] = results[first_instance.at(key)];
  }
  return results;
}

SearchOutcome find_strategies(const std::vector<std::string>& problems,
                              const std::vector<Strategy>& seeds, const FinderConfig& cfg,
                              const ParameterSpace& space, Solver& solver, RunStore& store,
                              StrategyStore& registry, Rng& rng) {
  if (problems.empty()) throw Error(Errc::bad_value, "no problems to search on");
  if (seeds.empty()) throw Error(Errc::no_strategies, "the search queue needs seed strategies");
  if (!(cfg.t_max > 0.0)) throw Error(Errc::bad_value, "search time limit must be > 0");
  if (cfg.tolerance < 0.0) throw Error(Errc::bad_value, "tolerance must be >= 0");

  auto limit_for = [&](const std::string& p) {
    const auto it = cfg.limit_overrides.find(p);
    return it == cfg.limit_overrides.end() ? cfg.t_max : it->second;
  };

  SearchOutcome outcome;
  std::deque<Strategy> queue;
  std::set<std::string> enqueued;
  for (const auto& s : seeds) {
    if (enqueued.insert(s.id).second) {
      registry.add(s);
      queue.push_back(s);
    }
  }

  std::map<std::string, double> best_time;
  std::map<std::string, Strategy> best_strategy;
  for (const auto& p : problems) best_time[p] = limit_for(p);

  while (!queue.empty()) {
    const Strategy s = queue.front();
    queue.pop_front();

    // Sweep s over every problem at the full limit in one batch.
    std::vector<RunJob> sweep;
    sweep.reserve(problems.size());
    for (const auto& p : problems) sweep.push_back({s, p, limit_for(p)});
    const std::vector<RunRecord> swept =
        run_batch_cached(solver, store, sweep, cfg.cores, &outcome.runs_launched,
                         &outcome.cache_hits);

    for (std::size_t pi = 0; pi < problems.size(); ++pi) {
      const std::string& p = problems[pi];
      const RunRecord& rec = swept[pi];
      const double old_best = best_time[p];

      if (rec.failed()) continue;
      const bool proof_found = rec.solved;
      const double time_needed = rec.wall_seconds;

      if (proof_found && time_needed < best_time[p]) {
        outcome.improvements.push_back({p, s.id, best_time[p], time_needed});
        best_time[p] = time_needed;
        best_strategy[p] = s;
      }

      if (proof_found && time_needed < best_time[p] + cfg.tolerance && time_needed > 0.0) {
        std::vector<Strategy> neighbors =
            create_random_strategies(s, cfg.walks, cfg.walk_length, space, rng);
        std::vector<RunJob> local;
        local.reserve(neighbors.size());
        for (auto& r : neighbors) {
          registry.add(r);
          local.push_back({std::move(r), p, time_needed});
        }
        const std::vector<RunRecord> tried =
            run_batch_cached(solver, store, local, cfg.cores, &outcome.runs_launched,
                             &outcome.cache_hits);
        for (std::size_t ri = 0; ri < tried.size(); ++ri) {
          const RunRecord& rrec = tried[ri];
          if (rrec.failed()) continue;
          if (rrec.solved && rrec.wall_seconds < best_time[p]) {
            outcome.improvements.push_back(
                {p, local[ri].strategy.id, best_time[p], rrec.wall_seconds});
            best_time[p] = rrec.wall_seconds;
            best_strategy[p] = local[ri].strategy;
          }
        }
        if (best_time[p] < old_best) {
          const Strategy& winner = best_strategy[p];
          if (enqueued.insert(winner.id).second) queue.push_back(winner);
        }
      }
    }
  }

  for (const auto& [p, s] : best_strategy) {
    outcome.best.emplace(p, std::make_pair(s, best_time[p]));
  }
  return outcome;
}

std::vector<std::string> select_preselected(const std::vector<RunRecord>& run_log,
                                            double tolerance) {
  if (run_log.empty()) throw Error(Errc::bad_value, "empty run log");

  std::map<std::string, double> best_time;  // fastest solve per problem
  for (const auto& rec : run_log) {
    if (!rec.solved || rec.failed()) continue;
    const auto it = best_time.find(rec.problem);
    if (it == best_time.end() || rec.wall_seconds < it->second) {
      best_time[rec.problem] = rec.wall_seconds;
    }
  }

  std::set<std::string> selected;
  for (const auto& rec : run_log) {
    if (!rec.solved || rec.failed()) continue;
    if (rec.wall_seconds <= best_time.at(rec.problem) + tolerance) {
      selected.insert(rec.strategy_id);
    }
  }
  return {selected.begin(), selected.end()};
}

std::vector<RunRecord> rerun_full_time(const std::vector<Strategy>& strategies,
                                       const std::vector<std::string>& problems,
                                       double full_limit, Solver& solver, RunStore& store,
                                       int cores) {
  if (!(full_limit > 0.0)) throw Error(Errc::bad_value, "full-time limit must be > 0");
  std::vector<RunJob> jobs;
  jobs.reserve(strategies.size() * problems.size());
  for (const auto& s : strategies) {
    for (const auto& p : problems) jobs.push_back({s, p, full_limit});
  }
  return run_batch_cached(solver, store, jobs, cores);
}

}  // namespace stratkit
