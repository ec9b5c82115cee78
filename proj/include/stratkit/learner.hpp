#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stratkit/config.hpp"
#include "stratkit/features.hpp"
#include "stratkit/runner.hpp"
#include "stratkit/strategy.hpp"
#include "stratkit/util.hpp"

namespace stratkit {

// Kernel ridge-regression runtime predictor for one strategy.
struct PredictionModel {
  std::string strategy_id;
  std::vector<std::string> train_ids;  // problems this strategy solved
  Eigen::MatrixXd X;                   // m x n normalized feature rows
  Eigen::VectorXd Y;                   // solve times plus cpu_bias
  Eigen::VectorXd A;                   // ridge weights
  double sigma = 1.0;
  double lambda = 1.0;
  double min_time = 0.0;  // min of Y
  double max_time = 0.0;  // max of Y
  int min_training_size = 5;

  Eigen::Index rows() const { return X.rows(); }
};

struct StartScheduleEntry {
  std::string strategy_id;
  double run_time = 0.0;
};
using StartSchedule = std::vector<StartScheduleEntry>;

// exp(-|x - y|^2 / sigma^2)
double gaussian_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double sigma);

// K[i][j] = k(row_i, row_j); symmetric with unit diagonal.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, double sigma);

// k(x, row_i) for every row of X.
Eigen::VectorXd kernel_column(const Eigen::MatrixXd& X, const Eigen::VectorXd& x, double sigma);

// Solves (K + lambda I) A = Y by Cholesky factorization.
Eigen::VectorXd fit_weights(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y, double lambda);

// Sum_i A_i k(x, X_i), unclamped.
double raw_predict(const PredictionModel& model, const Eigen::VectorXd& x);

// Applies the runtime heuristics: models with fewer than min_training_size
// rows predict max_time; otherwise the raw prediction is floored at
// min_time. The result is scaled by cpu_speed_ratio and floored at
// min_run_time.
double clamped_predict(const PredictionModel& model, const Eigen::VectorXd& x,
                       double cpu_speed_ratio, double min_run_time);

// Grid search over (lambda, sigma) by k-fold cross-validation; rows are
// shuffled deterministically with rng, folds are contiguous chunks with the
// remainder spread one per fold. Equal mean square loss is broken toward the
// smaller lambda, then the smaller sigma.
std::pair<double, double> cross_validate(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                                         const std::vector<double>& lambda_grid,
                                         const std::vector<double>& sigma_grid, int folds,
                                         Rng& rng);

// Greedy max-cover start schedule: repeatedly pick the strategy that solves
// the most uncovered problems within start_time; ties prefer the smaller
// total time on the newly covered problems, then the smaller strategy id.
// Stops early once no strategy covers a new problem.
StartSchedule select_start_strategies(const std::vector<RunRecord>& run_log, int n_start,
                                      double start_time);

// Fits one model per preselected strategy from its solved runs, excluding
// problems already covered by the start schedule. Strategies left with no
// training rows are dropped.
std::map<std::string, PredictionModel> build_models(
    const std::vector<Strategy>& preselected, const std::vector<RunRecord>& run_log,
    const std::map<std::string, Eigen::VectorXd>& raw_features, const NormalizationStats& stats,
    const StartSchedule& schedule, const Settings& settings);

}  // namespace stratkit
