#pragma once

#include <cstdio>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "stratkit/learner.hpp"
#include "stratkit/runner.hpp"
#include "stratkit/strategy.hpp"

namespace stratkit {

// Append-only run log, CSV `problem,strategy_id,solved,wall_seconds,time_limit`
// with a header line. Loads existing records on construction so interrupted
// searches can resume; a truncated final line (crash during write) is skipped
// with a warning. Appends are flushed before control returns. Single writer,
// guarded internally.
class RunStore {
 public:
  explicit RunStore(std::string path);
  ~RunStore();

  RunStore(const RunStore&) = delete;
  RunStore& operator=(const RunStore&) = delete;

  // Throws DuplicateRecord when the (problem, strategy_id, time_limit)
  // triple was already appended, IoFailure when the write fails.
  void append(const RunRecord& rec);

  // Removes every record, on disk and in memory.
  void clear();

  const std::vector<RunRecord>& records() const { return records_; }

  // Most informative record for the pair: the one with the largest
  // time_limit (ties: latest appended).
  std::optional<RunRecord> lookup(const std::string& problem,
                                  const std::string& strategy_id) const;

  // Replay: derives the outcome of running the pair at `limit` from stored
  // evidence, if the evidence is conclusive. A stored solve at w <= limit
  // replays as solved; a stored solve at w > limit, or a stored failure at a
  // limit >= `limit`, replays as unsolved.
  std::optional<RunRecord> cached_result(const std::string& problem,
                                         const std::string& strategy_id, double limit) const;

  const std::string& path() const { return path_; }

 private:
  void index_record(const RunRecord& rec, std::size_t position);

  std::string path_;
  std::FILE* file_ = nullptr;
  std::vector<RunRecord> records_;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> by_pair_;
  std::set<std::tuple<std::string, std::string, double>> seen_;
  mutable std::mutex mutex_;
};

// Registry of every strategy ever evaluated, kept in the strategies.ini
// format keyed by id. The finder appends to it as mutations are generated;
// later phases use it to resolve strategy ids back to definitions.
class StrategyStore {
 public:
  StrategyStore(std::string path, ParameterSpace space);

  // Registers s; appends to the file if unseen. Returns true when new.
  bool add(const Strategy& s);

  void clear();

  bool contains(const std::string& id) const { return by_id_.count(id) != 0; }
  const Strategy& get(const std::string& id) const;  // throws Error(missing_key)
  const std::vector<Strategy>& strategies() const { return strategies_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  ParameterSpace space_;
  std::vector<Strategy> strategies_;
  std::map<std::string, std::size_t> by_id_;
};

// Everything the run phase needs, produced by the learn phase: normalization
// stats, the start schedule, fitted models, the strategy definitions behind
// them, and the solved-times table used for in-session model updates.
struct ModelStore {
  int dimension = 0;
  NormalizationStats stats;
  StartSchedule start_schedule;
  std::string settings_fingerprint;
  std::string global_best_strategy;  // fallback when the schedule is exhausted
  double full_time_limit = 0.0;
  std::map<std::string, Strategy> strategies;
  std::map<std::string, PredictionModel> models;
  // problem -> strategy_id -> solve time (cpu_bias included, matching model Y)
  std::map<std::string, std::map<std::string, double>> solved_times;
};

// Writes manifest.json plus one models/<id>.json per model under dir.
// Deterministic: equal stores serialize byte-identically.
void save_models(const ModelStore& store, const std::string& dir);

// Loads a store written by save_models. When expected_fingerprint is
// nonempty and differs from the stored one: throws FingerprintMismatch,
// unless allow_mismatch, which warns and proceeds.
ModelStore load_models(const std::string& dir, const std::string& expected_fingerprint = "",
                       bool allow_mismatch = false);

}  // namespace stratkit
