#include "stratkit/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "stratkit/error.hpp"
#include "stratkit/features.hpp"

namespace stratkit {

Prediction choose_best_strategy(const std::vector<Prediction>& predictions,
                                const std::map<std::string, double>& history, Rng& rng,
                                double remaining) {
  if (predictions.empty()) throw Error(Errc::no_candidate, "no predictions to choose from");

  std::vector<const Prediction*> candidates;
  for (const auto& pred : predictions) {
    const auto it = history.find(pred.strategy_id);
    const double effective = std::min(pred.time, remaining);
    if (it == history.end() || effective > it->second) candidates.push_back(&pred);
  }
  if (candidates.empty()) {
    throw Error(Errc::no_candidate, "every strategy already ran at least this long");
  }

  double best = std::numeric_limits<double>::infinity();
  for (const auto* c : candidates) best = std::min(best, c->time);
  std::vector<const Prediction*> tied;
  for (const auto* c : candidates) {
    if (c->time == best) tied.push_back(c);
  }
  return *tied[tied.size() == 1 ? 0 : uniform_index(rng, tied.size())];
}

void update_models(std::map<std::string, PredictionModel>& models, const std::string& run_id,
                   double t_run,
                   const std::map<std::string, std::map<std::string, double>>& solved_times) {
  std::vector<std::string> dead;
  for (auto& [id, model] : models) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < model.rows(); ++i) {
      const auto& problem = model.train_ids[static_cast<std::size_t>(i)];
      const auto pit = solved_times.find(problem);
      bool solved_by_run = false;
      if (pit != solved_times.end()) {
        const auto sit = pit->second.find(run_id);
        solved_by_run = sit != pit->second.end() && sit->second <= t_run;
      }
      if (!solved_by_run) keep.push_back(i);
    }
    if (static_cast<std::size_t>(keep.size()) == model.train_ids.size()) continue;
    if (keep.empty()) {
      dead.push_back(id);
      continue;
    }

    PredictionModel next;
    next.strategy_id = model.strategy_id;
    next.sigma = model.sigma;
    next.lambda = model.lambda;
    next.min_training_size = model.min_training_size;
    next.X.resize(static_cast<Eigen::Index>(keep.size()), model.X.cols());
    next.Y.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      next.train_ids.push_back(model.train_ids[static_cast<std::size_t>(keep[k])]);
      next.X.row(static_cast<Eigen::Index>(k)) = model.X.row(keep[k]);
      next.Y[static_cast<Eigen::Index>(k)] = model.Y[keep[k]];
    }
    next.min_time = next.Y.minCoeff();
    next.max_time = next.Y.maxCoeff();
    next.A = fit_weights(kernel_matrix(next.X, next.sigma), next.Y, next.lambda);
    model = std::move(next);
  }
  for (const auto& id : dead) models.erase(id);
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const Strategy& strategy_for(const ModelStore& store, const std::string& id) {
  const auto it = store.strategies.find(id);
  if (it == store.strategies.end()) {
    throw Error(Errc::missing_key, "strategy " + id + " referenced but not in the model store");
  }
  return it->second;
}

}  // namespace

SolveResult solve(const std::string& problem, double budget, const ModelStore& store,
                  const Settings& settings, Solver& solver) {
  if (!(budget > 0.0)) throw Error(Errc::bad_value, "time budget must be > 0");

  SolveResult result;
  std::map<std::string, double> history;
  Rng rng(settings.rng_seed ^ fnv1a(problem));

  // Feature extraction is real work; it comes out of the budget.
  const auto extract_start = std::chrono::steady_clock::now();
  const Eigen::VectorXd x =
      normalize(extract_features(problem, settings, store.dimension), store.stats);
  const double extract_elapsed = seconds_since(extract_start);
  result.time_used += extract_elapsed;
  result.event_log.push_back({"features", "", 0.0, extract_elapsed, false});

  auto run_once = [&](const std::string& kind, const std::string& id, double allotment) {
    const RunRecord rec = solver.run(strategy_for(store, id), problem, allotment);
    result.time_used += rec.wall_seconds;
    auto& known = history[id];
    known = std::max(known, allotment);
    result.event_log.push_back({kind, id, allotment, rec.wall_seconds, rec.solved});
    if (rec.solved) {
      result.solved = true;
      result.solved_by = id;
    }
    return rec;
  };

  for (const auto& entry : store.start_schedule) {
    const double remaining = budget - result.time_used;
    if (remaining < settings.min_run_time) break;
    const double allotment = std::min(entry.run_time, remaining);
    if (allotment < settings.min_run_time) break;
    run_once("start", entry.strategy_id, allotment);
    if (result.solved) return result;
  }

  std::map<std::string, PredictionModel> live = store.models;

  while (result.time_used < budget) {
    const double remaining = budget - result.time_used;
    if (remaining < settings.min_run_time) break;

    std::vector<Prediction> predictions;
    predictions.reserve(live.size());
    for (const auto& [id, model] : live) {
      predictions.push_back(
          {clamped_predict(model, x, settings.cpu_speed_ratio, settings.min_run_time), id});
    }

    Prediction chosen;
    try {
      if (predictions.empty()) throw Error(Errc::no_candidate, "no live models");
      chosen = choose_best_strategy(predictions, history, rng, remaining);
    } catch (const Error& e) {
      if (e.code() != Errc::no_candidate) throw;
      // Schedule exhausted: give the globally best strategy all remaining time.
      if (!store.global_best_strategy.empty() &&
          remaining > history[store.global_best_strategy] &&
          remaining >= settings.min_run_time) {
        run_once("escalation", store.global_best_strategy, remaining);
      }
      return result;
    }

    const double allotment = std::min(chosen.time, remaining);
    run_once("predicted", chosen.strategy_id, allotment);
    if (result.solved) return result;

    const auto update_start = std::chrono::steady_clock::now();
    update_models(live, chosen.strategy_id, allotment, store.solved_times);
    const double update_elapsed = seconds_since(update_start);
    result.time_used += update_elapsed;
    result.event_log.push_back({"update", chosen.strategy_id, 0.0, update_elapsed, false});
  }
  return result;
}

}  // namespace stratkit
