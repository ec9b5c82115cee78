#pragma once

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "stratkit/config.hpp"
#include "stratkit/learner.hpp"
#include "stratkit/runner.hpp"
#include "stratkit/store.hpp"
#include "stratkit/util.hpp"

namespace stratkit {

struct Prediction {
  double time = 0.0;
  std::string strategy_id;
};

// Picks the minimum-time prediction among strategies that would run longer
// than they already have (their effective allotment min(time, remaining)
// must exceed the history entry). Exact ties are broken by a seeded uniform
// draw. Throws NoCandidate when nothing qualifies.
Prediction choose_best_strategy(const std::vector<Prediction>& predictions,
                                const std::map<std::string, double>& history, Rng& rng,
                                double remaining = std::numeric_limits<double>::infinity());

// After strategy `run_id` failed a run of t_run seconds: drops from every
// model the training problems that `run_id` solves within t_run (per the
// stored solved-times table) and refits the weights with the model's
// existing (lambda, sigma). Models left without rows are removed; min/max
// clamps are recomputed from the surviving rows.
void update_models(std::map<std::string, PredictionModel>& models, const std::string& run_id,
                   double t_run,
                   const std::map<std::string, std::map<std::string, double>>& solved_times);

struct SolveEvent {
  std::string kind;  // "features", "start", "predicted", "update", "escalation"
  std::string strategy_id;
  double allotted = 0.0;
  double elapsed = 0.0;
  bool solved = false;
};

struct SolveResult {
  bool solved = false;
  double time_used = 0.0;
  std::string solved_by;
  std::vector<SolveEvent> event_log;
};

// Full scheduling loop for one problem: charge feature extraction, run the
// start schedule, then repeatedly predict-run-update until solved or the
// budget is exhausted. The model store is never mutated; all model updates
// happen on session-local copies.
SolveResult solve(const std::string& problem, double budget, const ModelStore& store,
                  const Settings& settings, Solver& solver);

}  // namespace stratkit
