#include "stratkit/learner.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include "stratkit/error.hpp"

namespace stratkit {

double gaussian_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double sigma) {
  if (x.size() != y.size()) {
    throw Error(Errc::dimension_mismatch, "kernel arguments of dimension " +
                                              std::to_string(x.size()) + " and " +
                                              std::to_string(y.size()));
  }
  if (!(sigma > 0.0)) throw Error(Errc::bad_value, "kernel width must be > 0");
  return std::exp(-(x - y).squaredNorm() / (sigma * sigma));
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, double sigma) {
  if (X.rows() < 1) throw Error(Errc::empty_training_set, "kernel matrix of zero rows");
  if (!(sigma > 0.0)) throw Error(Errc::bad_value, "kernel width must be > 0");
  const Eigen::Index m = X.rows();
  Eigen::MatrixXd K(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double k = std::exp(-(X.row(i) - X.row(j)).squaredNorm() / (sigma * sigma));
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  return K;
}

Eigen::VectorXd kernel_column(const Eigen::MatrixXd& X, const Eigen::VectorXd& x, double sigma) {
  if (X.cols() != x.size()) {
    throw Error(Errc::dimension_mismatch, "vector dimension " + std::to_string(x.size()) +
                                              " vs model dimension " + std::to_string(X.cols()));
  }
  Eigen::VectorXd k(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    k[i] = std::exp(-(X.row(i).transpose() - x).squaredNorm() / (sigma * sigma));
  }
  return k;
}

Eigen::VectorXd fit_weights(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y, double lambda) {
  if (!(lambda > 0.0)) throw Error(Errc::bad_value, "ridge parameter must be > 0");
  if (K.rows() != K.cols() || K.rows() != Y.size()) {
    throw Error(Errc::dimension_mismatch, "kernel is " + std::to_string(K.rows()) + "x" +
                                              std::to_string(K.cols()) + ", Y has " +
                                              std::to_string(Y.size()) + " entries");
  }
  Eigen::MatrixXd M = K;
  M.diagonal().array() += lambda;
  const Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::numerical_failure, "Cholesky factorization of K + lambda I failed");
  }
  return llt.solve(Y);
}

double raw_predict(const PredictionModel& model, const Eigen::VectorXd& x) {
  if (model.rows() == 0) throw Error(Errc::empty_model, model.strategy_id);
  return kernel_column(model.X, x, model.sigma).dot(model.A);
}

double clamped_predict(const PredictionModel& model, const Eigen::VectorXd& x,
                       double cpu_speed_ratio, double min_run_time) {
  if (model.rows() == 0) throw Error(Errc::empty_model, model.strategy_id);
  double t = 0.0;
  if (model.rows() < model.min_training_size) {
    t = model.max_time;
  } else {
    t = std::max(raw_predict(model, x), model.min_time);
  }
  t *= cpu_speed_ratio;
  return std::max(t, min_run_time);
}

std::pair<double, double> cross_validate(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                                         const std::vector<double>& lambda_grid,
                                         const std::vector<double>& sigma_grid, int folds,
                                         Rng& rng) {
  const Eigen::Index m = X.rows();
  if (folds < 2) throw Error(Errc::bad_value, "cross-validation needs at least 2 folds");
  if (m < folds) {
    throw Error(Errc::too_few_samples, std::to_string(m) + " rows for " + std::to_string(folds) +
                                           " folds");
  }
  if (lambda_grid.empty() || sigma_grid.empty()) {
    throw Error(Errc::bad_value, "empty parameter grid");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
  shuffle_deterministic(order, rng);

  // Contiguous chunks of the shuffled order; the first (m % folds) folds get
  // one extra row.
  std::vector<std::vector<Eigen::Index>> fold_rows(static_cast<std::size_t>(folds));
  const Eigen::Index base = m / folds;
  const Eigen::Index extra = m % folds;
  std::size_t cursor = 0;
  for (int f = 0; f < folds; ++f) {
    const Eigen::Index size = base + (f < extra ? 1 : 0);
    for (Eigen::Index i = 0; i < size; ++i) {
      fold_rows[static_cast<std::size_t>(f)].push_back(order[cursor++]);
    }
  }

  double best_loss = std::numeric_limits<double>::infinity();
  double best_lambda = lambda_grid.front();
  double best_sigma = sigma_grid.front();
  bool first = true;

  for (const double lambda : lambda_grid) {
    for (const double sigma : sigma_grid) {
      double loss_sum = 0.0;
      for (int f = 0; f < folds; ++f) {
        const auto& held = fold_rows[static_cast<std::size_t>(f)];
        if (held.empty()) continue;
        const Eigen::Index train_m = m - static_cast<Eigen::Index>(held.size());
        std::vector<char> in_fold(static_cast<std::size_t>(m), 0);
        for (const Eigen::Index r : held) in_fold[static_cast<std::size_t>(r)] = 1;

        Eigen::MatrixXd Xt(train_m, X.cols());
        Eigen::VectorXd Yt(train_m);
        Eigen::Index w = 0;
        for (Eigen::Index r = 0; r < m; ++r) {
          if (!in_fold[static_cast<std::size_t>(r)]) {
            Xt.row(w) = X.row(r);
            Yt[w] = Y[r];
            ++w;
          }
        }
        const Eigen::VectorXd A = fit_weights(kernel_matrix(Xt, sigma), Yt, lambda);

        double fold_loss = 0.0;
        for (const Eigen::Index r : held) {
          const double pred = kernel_column(Xt, X.row(r).transpose(), sigma).dot(A);
          const double err = pred - Y[r];
          fold_loss += err * err;
        }
        loss_sum += fold_loss / static_cast<double>(held.size());
      }
      const double mean_loss = loss_sum / static_cast<double>(folds);

      const bool better =
          first || mean_loss < best_loss ||
          (mean_loss == best_loss &&
           (lambda < best_lambda || (lambda == best_lambda && sigma < best_sigma)));
      if (better) {
        best_loss = mean_loss;
        best_lambda = lambda;
        best_sigma = sigma;
        first = false;
      }
    }
  }
  return {best_lambda, best_sigma};
}

namespace {

// Earliest-solved time per (problem, strategy) pair within the log.
std::map<std::string, std::map<std::string, double>> solved_times_by_strategy(
    const std::vector<RunRecord>& run_log) {
  std::map<std::string, std::map<std::string, double>> times;  // strategy -> problem -> time
  for (const auto& rec : run_log) {
    if (!rec.solved || rec.failed()) continue;
    auto& per_problem = times[rec.strategy_id];
    const auto it = per_problem.find(rec.problem);
    if (it == per_problem.end() || rec.wall_seconds < it->second) {
      per_problem[rec.problem] = rec.wall_seconds;
    }
  }
  return times;
}

}  // namespace

StartSchedule select_start_strategies(const std::vector<RunRecord>& run_log, int n_start,
                                      double start_time) {
  const auto times = solved_times_by_strategy(run_log);

  // coverage[s] = problems s solves within start_time
  std::map<std::string, std::map<std::string, double>> coverage;
  for (const auto& [sid, per_problem] : times) {
    for (const auto& [problem, t] : per_problem) {
      if (t <= start_time) coverage[sid][problem] = t;
    }
  }

  StartSchedule schedule;
  std::set<std::string> covered;
  std::set<std::string> used;
  for (int pick = 0; pick < n_start; ++pick) {
    std::string best_id;
    std::size_t best_new = 0;
    double best_total = 0.0;
    for (const auto& [sid, per_problem] : coverage) {
      if (used.count(sid)) continue;
      std::size_t new_count = 0;
      double total = 0.0;
      for (const auto& [problem, t] : per_problem) {
        if (!covered.count(problem)) {
          ++new_count;
          total += t;
        }
      }
      if (new_count == 0) continue;
      const bool better = new_count > best_new ||
                          (new_count == best_new &&
                           (total < best_total || (total == best_total && sid < best_id)));
      if (best_id.empty() || better) {
        best_id = sid;
        best_new = new_count;
        best_total = total;
      }
    }
    if (best_id.empty()) break;  // nothing adds coverage
    schedule.push_back({best_id, start_time});
    used.insert(best_id);
    for (const auto& [problem, t] : coverage[best_id]) covered.insert(problem);
  }
  return schedule;
}

std::map<std::string, PredictionModel> build_models(
    const std::vector<Strategy>& preselected, const std::vector<RunRecord>& run_log,
    const std::map<std::string, Eigen::VectorXd>& raw_features, const NormalizationStats& stats,
    const StartSchedule& schedule, const Settings& settings) {
  const auto times = solved_times_by_strategy(run_log);

  // Problems dispatched by the start schedule never reach the predictors, so
  // they are excluded from every training set.
  std::set<std::string> covered;
  for (const auto& entry : schedule) {
    const auto it = times.find(entry.strategy_id);
    if (it == times.end()) continue;
    for (const auto& [problem, t] : it->second) {
      if (t <= entry.run_time) covered.insert(problem);
    }
  }

  struct FitJob {
    const Strategy* strategy;
    std::vector<std::pair<std::string, double>> rows;  // (problem, time)
  };
  std::vector<FitJob> jobs;
  for (const auto& s : preselected) {
    const auto it = times.find(s.id);
    if (it == times.end()) continue;
    FitJob job;
    job.strategy = &s;
    for (const auto& [problem, t] : it->second) {
      if (covered.count(problem)) continue;
      if (!raw_features.count(problem)) {
        throw Error(Errc::extractor_failure, problem + ": solved in the run log but has no features");
      }
      job.rows.emplace_back(problem, t);
    }
    if (!job.rows.empty()) jobs.push_back(std::move(job));
  }

  std::vector<PredictionModel> fitted(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      try {
        const FitJob& job = jobs[j];
        PredictionModel model;
        model.strategy_id = job.strategy->id;
        model.min_training_size = settings.min_training_size;
        const Eigen::Index m = static_cast<Eigen::Index>(job.rows.size());
        model.X.resize(m, stats.dimension());
        model.Y.resize(m);
        for (Eigen::Index i = 0; i < m; ++i) {
          const auto& [problem, t] = job.rows[static_cast<std::size_t>(i)];
          model.train_ids.push_back(problem);
          model.X.row(i) = normalize(raw_features.at(problem), stats).transpose();
          model.Y[i] = t + settings.cpu_bias;
        }
        model.min_time = model.Y.minCoeff();
        model.max_time = model.Y.maxCoeff();

        if (settings.crossvalidate && m >= settings.cv_folds) {
          Rng rng(settings.rng_seed ^ fnv1a(model.strategy_id));
          std::tie(model.lambda, model.sigma) =
              cross_validate(model.X, model.Y, settings.regularization_grid, settings.kernel_grid,
                             settings.cv_folds, rng);
        } else {
          model.lambda = settings.regularization_grid.front();
          model.sigma = settings.kernel_grid.front();
        }
        model.A = fit_weights(kernel_matrix(model.X, model.sigma), model.Y, model.lambda);
        fitted[j] = std::move(model);
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(settings.cores, 1)),
                            std::max<std::size_t>(jobs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::map<std::string, PredictionModel> models;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (!errors[j].empty()) {
      throw Error(Errc::numerical_failure,
                  "fitting " + jobs[j].strategy->id + ": " + errors[j]);
    }
    models.emplace(fitted[j].strategy_id, std::move(fitted[j]));
  }
  return models;
}

}  // namespace stratkit
