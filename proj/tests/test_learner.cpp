#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stratkit/config.hpp"
#include "stratkit/error.hpp"
#include "stratkit/learner.hpp"
#include "stratkit/strategy.hpp"
#include "stratkit/util.hpp"

#include "test_util.hpp"

using namespace stratkit;

namespace {

double unit_draw(Rng& rng) {
  return static_cast<double>(rng()) / static_cast<double>(Rng::max());
}

Eigen::MatrixXd random_rows(Rng& rng, int m, int n) {
  Eigen::MatrixXd X(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) X(i, j) = unit_draw(rng);
  }
  return X;
}

Eigen::VectorXd random_vector(Rng& rng, int m, double lo, double hi) {
  Eigen::VectorXd v(m);
  for (int i = 0; i < m; ++i) v[i] = lo + unit_draw(rng) * (hi - lo);
  return v;
}

// Squared-similarity kernel computed from first principles, used only by the
// oracles in this file.
double oracle_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double sigma) {
  double ss = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    ss += d * d;
  }
  return std::exp(-ss / (sigma * sigma));
}

// The regularized square-loss objective the weights are supposed to minimize.
double objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y, double lambda,
                 const Eigen::VectorXd& A) {
  const Eigen::VectorXd r = Y - K * A;
  return r.dot(r) + lambda * A.dot(K * A);
}

// Independent minimizer of the objective: eigendecompose K and minimize each
// spectral coordinate in closed form. Shares no code with the solver under
// test (eigendecomposition vs. Cholesky).
Eigen::VectorXd spectral_minimizer(const Eigen::MatrixXd& K, const Eigen::VectorXd& Y,
                                   double lambda) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  REQUIRE(es.info() == Eigen::Success);
  const Eigen::VectorXd y_spec = es.eigenvectors().transpose() * Y;
  Eigen::VectorXd a_spec(y_spec.size());
  for (Eigen::Index i = 0; i < y_spec.size(); ++i) {
    a_spec[i] = y_spec[i] / (es.eigenvalues()[i] + lambda);
  }
  return es.eigenvectors() * a_spec;
}

PredictionModel fitted_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, double sigma,
                             double lambda, int min_training_size = 5) {
  PredictionModel model;
  model.strategy_id = "model";
  model.X = X;
  model.Y = Y;
  model.sigma = sigma;
  model.lambda = lambda;
  model.min_time = Y.minCoeff();
  model.max_time = Y.maxCoeff();
  model.min_training_size = min_training_size;
  model.A = fit_weights(kernel_matrix(X, sigma), Y, lambda);
  for (Eigen::Index i = 0; i < Y.size(); ++i) {
    model.train_ids.push_back("p" + std::to_string(i));
  }
  return model;
}

RunRecord solved_run(const std::string& problem, const std::string& sid, double t,
                     double limit = 300.0) {
  RunRecord rec;
  rec.problem = problem;
  rec.strategy_id = sid;
  rec.solved = true;
  rec.wall_seconds = t;
  rec.time_limit = limit;
  return rec;
}

RunRecord unsolved_run(const std::string& problem, const std::string& sid, double limit = 300.0) {
  RunRecord rec;
  rec.problem = problem;
  rec.strategy_id = sid;
  rec.solved = false;
  rec.wall_seconds = limit;
  rec.time_limit = limit;
  return rec;
}

}  // namespace

TEST_CASE("kernel closed-form values") {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd one(1);
  one[0] = 1.0;

  CHECK(gaussian_kernel(zero, zero, 2.0) == 1.0);
  CHECK(gaussian_kernel(one, one, 0.3) == 1.0);
  CHECK(gaussian_kernel(zero, one, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd x = random_vector(rng, 4, -3.0, 3.0);
    const Eigen::VectorXd y = random_vector(rng, 4, -3.0, 3.0);
    const double sigma = 0.1 + unit_draw(rng) * 5.0;
    const double k = gaussian_kernel(x, y, sigma);
    CHECK(k == gaussian_kernel(y, x, sigma));  // symmetric
    CHECK(k > 0.0);
    CHECK(k <= 1.0);
  }

  CHECK_ERROR(gaussian_kernel(zero, Eigen::VectorXd::Zero(2), 1.0), Errc::dimension_mismatch);
  CHECK_ERROR(gaussian_kernel(zero, zero, 0.0), Errc::bad_value);
}

TEST_CASE("kernel matrices are symmetric, unit-diagonal and positive semidefinite") {
  SUBCASE("degenerate shapes") {
    const Eigen::MatrixXd single = kernel_matrix(Eigen::MatrixXd::Random(1, 3), 1.0);
    CHECK(single.rows() == 1);
    CHECK(single(0, 0) == 1.0);

    Eigen::MatrixXd twins(2, 3);
    twins.row(0) << 1, 2, 3;
    twins.row(1) << 1, 2, 3;
    CHECK(kernel_matrix(twins, 1.0) == Eigen::MatrixXd::Ones(2, 2));
  }

  SUBCASE("random instances pass the eigenvalue oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 25; ++trial) {
      const Eigen::MatrixXd X = random_rows(rng, 10, 4);
      const double sigma = 0.2 + unit_draw(rng) * 3.0;
      const Eigen::MatrixXd K = kernel_matrix(X, sigma);

      CHECK(K == K.transpose());
      for (int i = 0; i < 10; ++i) CHECK(K(i, i) == 1.0);
      for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
          CHECK(K(i, j) ==
                doctest::Approx(oracle_kernel(X.row(i), X.row(j), sigma)).epsilon(1e-14));
        }
      }

      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
      CHECK(es.eigenvalues().minCoeff() >= -1e-8);

      // Adding the ridge shifts the whole spectrum up by the ridge value.
      const double lambda = 0.05;
      Eigen::MatrixXd ridged = K;
      ridged.diagonal().array() += lambda;
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(ridged);
      CHECK(es2.eigenvalues().minCoeff() >= lambda - 1e-8);
    }
  }
}

TEST_CASE("weight fitting solves the ridge system") {
  SUBCASE("scalar case") {
    Eigen::MatrixXd K(1, 1);
    K << 1.0;
    Eigen::VectorXd Y(1);
    Y << 4.0;
    const Eigen::VectorXd A = fit_weights(K, Y, 1.0);
    CHECK(A[0] == doctest::Approx(2.0).epsilon(1e-14));
  }

  SUBCASE("an enormous ridge drives the weights to zero") {
    Rng rng(21);
    const Eigen::MatrixXd K = kernel_matrix(random_rows(rng, 5, 3), 1.0);
    const Eigen::VectorXd Y = random_vector(rng, 5, 1.0, 100.0);
    const Eigen::VectorXd A = fit_weights(K, Y, 1e9);
    CHECK(A.lpNorm<Eigen::Infinity>() < 1e-6 * Y.lpNorm<Eigen::Infinity>());
  }

  SUBCASE("solution matches the independent spectral minimizer") {
    Rng rng(31);
    for (const double lambda : {0.01, 0.1, 1.0}) {
      for (int trial = 0; trial < 10; ++trial) {
        const int m = 3 + static_cast<int>(uniform_index(rng, 18));  // up to 20
        const Eigen::MatrixXd K = kernel_matrix(random_rows(rng, m, 4), 0.8);
        const Eigen::VectorXd Y = random_vector(rng, m, 0.1, 60.0);
        const Eigen::VectorXd A = fit_weights(K, Y, lambda);

        // Solves the linear system...
        Eigen::MatrixXd ridged = K;
        ridged.diagonal().array() += lambda;
        CHECK((ridged * A - Y).lpNorm<Eigen::Infinity>() <= 1e-8);

        // ...and agrees with the closed-form minimizer of the objective.
        const Eigen::VectorXd A_oracle = spectral_minimizer(K, Y, lambda);
        CHECK((A - A_oracle).lpNorm<Eigen::Infinity>() <= 1e-6);

        // The gradient of the objective vanishes at the solution.
        const Eigen::VectorXd grad = -2.0 * K * (Y - K * A) + 2.0 * lambda * (K * A);
        CHECK(grad.lpNorm<Eigen::Infinity>() <= 1e-6 * m);

        // No nearby point does better (convexity spot check).
        const double at_solution = objective(K, Y, lambda, A);
        for (int probe = 0; probe < 5; ++probe) {
          const Eigen::VectorXd delta = random_vector(rng, m, -1e-3, 1e-3);
          CHECK(objective(K, Y, lambda, A + delta) >= at_solution - 1e-9);
        }
      }
    }
  }

  SUBCASE("invalid inputs are rejected") {
    CHECK_ERROR(fit_weights(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 0.0),
                Errc::bad_value);
    CHECK_ERROR(fit_weights(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(3), 1.0),
                Errc::dimension_mismatch);
  }
}

TEST_CASE("raw predictions reproduce the training algebra") {
  SUBCASE("single training point") {
    const double lambda = 1e-3;
    Eigen::MatrixXd X(1, 2);
    X << 0.3, 0.7;
    Eigen::VectorXd Y(1);
    Y << 8.0;
    const PredictionModel model = fitted_model(X, Y, 1.0, lambda);
    // At the sole training point the kernel is one, so the prediction is the
    // single weight: Y / (1 + lambda).
    CHECK(raw_predict(model, X.row(0).transpose()) ==
          doctest::Approx(8.0 / (1.0 + lambda)).epsilon(1e-12));
  }

  SUBCASE("prediction at training point i is row i of K times the weights") {
    Rng rng(41);
    const Eigen::MatrixXd X = random_rows(rng, 12, 3);
    const Eigen::VectorXd Y = random_vector(rng, 12, 0.5, 30.0);
    const PredictionModel model = fitted_model(X, Y, 0.7, 0.05);
    const Eigen::VectorXd KA = kernel_matrix(X, 0.7) * model.A;
    for (int i = 0; i < 12; ++i) {
      CHECK(raw_predict(model, X.row(i).transpose()) ==
            doctest::Approx(KA[i]).epsilon(1e-10));
    }
  }

  SUBCASE("with a vanishing ridge the model interpolates the training data") {
    Rng rng(43);
    const Eigen::MatrixXd X = random_rows(rng, 8, 3);  // distinct rows a.s.
    const Eigen::VectorXd Y = random_vector(rng, 8, 1.0, 50.0);
    const PredictionModel model = fitted_model(X, Y, 1.0, 1e-8);
    for (int i = 0; i < 8; ++i) {
      const double pred = raw_predict(model, X.row(i).transpose());
      CHECK(std::abs(pred - Y[i]) <= 1e-3 * std::abs(Y[i]));
    }
  }

  SUBCASE("an empty model cannot predict") {
    PredictionModel empty;
    CHECK_ERROR(raw_predict(empty, Eigen::VectorXd::Zero(2)), Errc::empty_model);
    CHECK_ERROR(clamped_predict(empty, Eigen::VectorXd::Zero(2), 1.0, 0.1), Errc::empty_model);
  }
}

TEST_CASE("clamped predictions apply the runtime heuristics") {
  Rng rng(53);

  SUBCASE("predictions never fall below the fastest training time") {
    const Eigen::MatrixXd X = random_rows(rng, 20, 3);
    Eigen::VectorXd Y = random_vector(rng, 20, 0.5, 10.0);
    Y[7] = 0.5;  // pin the minimum
    const PredictionModel model = fitted_model(X, Y, 1.0, 0.1);
    // Far away from all training data the raw prediction decays toward zero;
    // the clamp keeps it at the observed minimum.
    const Eigen::VectorXd far = Eigen::VectorXd::Constant(3, 50.0);
    CHECK(raw_predict(model, far) < 0.5);
    CHECK(clamped_predict(model, far, 1.0, 0.1) == 0.5);
  }

  SUBCASE("small models predict the maximum training time regardless of input") {
    const Eigen::MatrixXd X = random_rows(rng, 3, 2);
    Eigen::VectorXd Y(3);
    Y << 2.0, 12.0, 5.0;
    const PredictionModel model = fitted_model(X, Y, 1.0, 0.1, /*min_training_size=*/5);
    for (int i = 0; i < 10; ++i) {
      const Eigen::VectorXd x = random_vector(rng, 2, -5.0, 5.0);
      CHECK(clamped_predict(model, x, 1.0, 0.1) == 12.0);
    }
  }

  SUBCASE("the speed ratio scales the clamped prediction") {
    const Eigen::MatrixXd X = random_rows(rng, 2, 2);
    Eigen::VectorXd Y(2);
    Y << 1.0, 2.0;
    const PredictionModel model = fitted_model(X, Y, 1.0, 0.1);  // m=2 < 5 -> max_time
    CHECK(clamped_predict(model, Eigen::VectorXd::Zero(2), 1.5, 0.1) == 3.0);
  }

  SUBCASE("the floor is the minimal run time") {
    const Eigen::MatrixXd X = random_rows(rng, 6, 2);
    const Eigen::VectorXd Y = Eigen::VectorXd::Constant(6, 0.02);
    const PredictionModel model = fitted_model(X, Y, 1.0, 0.1);
    CHECK(clamped_predict(model, Eigen::VectorXd::Zero(2), 1.0, 0.25) == 0.25);
  }
}

TEST_CASE("cross-validation selects the least mean fold loss") {
  SUBCASE("a grid of one pair is returned unchanged") {
    Rng rng(61);
    const Eigen::MatrixXd X = random_rows(rng, 12, 2);
    const Eigen::VectorXd Y = random_vector(rng, 12, 1.0, 5.0);
    Rng cv_rng(0);
    CHECK(cross_validate(X, Y, {0.5}, {2.0}, 3, cv_rng) == std::pair<double, double>{0.5, 2.0});
  }

  SUBCASE("too few rows for the fold count") {
    Rng rng(62);
    const Eigen::MatrixXd X = random_rows(rng, 5, 2);
    const Eigen::VectorXd Y = random_vector(rng, 5, 1.0, 5.0);
    Rng cv_rng(0);
    CHECK_ERROR(cross_validate(X, Y, {0.1}, {1.0}, 10, cv_rng), Errc::too_few_samples);
  }

  SUBCASE("the returned pair attains the exhaustive loss-table minimum") {
    // Noise-free targets generated inside the model family: a weighted sum
    // of similarity bumps of width 1.
    Rng rng(63);
    const int m = 40;
    const Eigen::MatrixXd X = random_rows(rng, m, 3);
    const Eigen::MatrixXd anchors = random_rows(rng, 6, 3);
    const Eigen::VectorXd w = random_vector(rng, 6, 1.0, 10.0);
    Eigen::VectorXd Y(m);
    for (int i = 0; i < m; ++i) {
      double y = 0.0;
      for (int j = 0; j < 6; ++j) y += w[j] * oracle_kernel(X.row(i), anchors.row(j), 1.0);
      Y[i] = y;
    }

    const std::vector<double> lambdas = {1e-6, 1e-2, 1.0};
    const std::vector<double> sigmas = {0.25, 1.0, 4.0};
    const int folds = 5;
    const std::uint64_t seed = 99;

    Rng lib_rng(seed);
    const auto [best_lambda, best_sigma] =
        cross_validate(X, Y, lambdas, sigmas, folds, lib_rng);

    // Reproduce the fold partition: deterministic shuffle, then contiguous
    // chunks with the remainder spread over the leading folds.
    Rng part_rng(seed);
    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
    shuffle_deterministic(order, part_rng);
    std::vector<std::vector<int>> fold_rows(folds);
    std::size_t cursor = 0;
    for (int f = 0; f < folds; ++f) {
      const int size = m / folds + (f < m % folds ? 1 : 0);
      for (int i = 0; i < size; ++i) fold_rows[static_cast<std::size_t>(f)].push_back(order[cursor++]);
    }

    // Exhaustive loss table computed with the spectral solver and the
    // first-principles kernel.
    std::map<std::pair<double, double>, double> table;
    for (const double lambda : lambdas) {
      for (const double sigma : sigmas) {
        double loss_sum = 0.0;
        for (int f = 0; f < folds; ++f) {
          std::vector<char> held(m, 0);
          for (const int r : fold_rows[static_cast<std::size_t>(f)]) held[static_cast<std::size_t>(r)] = 1;
          std::vector<int> train;
          for (int r = 0; r < m; ++r) {
            if (!held[static_cast<std::size_t>(r)]) train.push_back(r);
          }
          const int tm = static_cast<int>(train.size());
          Eigen::MatrixXd Kt(tm, tm);
          Eigen::VectorXd Yt(tm);
          for (int a = 0; a < tm; ++a) {
            Yt[a] = Y[train[static_cast<std::size_t>(a)]];
            for (int b = 0; b < tm; ++b) {
              Kt(a, b) = oracle_kernel(X.row(train[static_cast<std::size_t>(a)]),
                                       X.row(train[static_cast<std::size_t>(b)]), sigma);
            }
          }
          const Eigen::VectorXd A = spectral_minimizer(Kt, Yt, lambda);
          double fold_loss = 0.0;
          for (const int r : fold_rows[static_cast<std::size_t>(f)]) {
            double pred = 0.0;
            for (int a = 0; a < tm; ++a) {
              pred += A[a] *
                      oracle_kernel(X.row(r), X.row(train[static_cast<std::size_t>(a)]), sigma);
            }
            fold_loss += (pred - Y[r]) * (pred - Y[r]);
          }
          loss_sum += fold_loss / static_cast<double>(fold_rows[static_cast<std::size_t>(f)].size());
        }
        table[{lambda, sigma}] = loss_sum / folds;
      }
    }

    double table_min = std::numeric_limits<double>::infinity();
    for (const auto& [pair, loss] : table) table_min = std::min(table_min, loss);
    REQUIRE(table.count({best_lambda, best_sigma}) == 1);
    CHECK(table.at({best_lambda, best_sigma}) <= table_min + 1e-8);
  }

  SUBCASE("exact loss ties prefer the smaller kernel width") {
    // Identical rows make the kernel width irrelevant, so all widths tie.
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(6, 2);
    const Eigen::VectorXd Y = Eigen::VectorXd::Constant(6, 3.0);
    Rng cv_rng(5);
    const auto [lambda, sigma] = cross_validate(X, Y, {0.1}, {5.0, 0.5, 1.0}, 3, cv_rng);
    CHECK(lambda == 0.1);
    CHECK(sigma == 0.5);
  }
}

TEST_CASE("start strategies greedily cover the most problems") {
  SUBCASE("textbook cover instance") {
    // s1 covers {a,b,c}, s2 covers {c,d}, s3 covers {d,e}.
    const std::vector<RunRecord> log = {
        solved_run("a", "s1", 0.5), solved_run("b", "s1", 0.5), solved_run("c", "s1", 0.5),
        solved_run("c", "s2", 0.4), solved_run("d", "s2", 0.4),
        solved_run("d", "s3", 0.6), solved_run("e", "s3", 0.6),
    };
    const StartSchedule schedule = select_start_strategies(log, 2, 1.0);
    REQUIRE(schedule.size() == 2);
    CHECK(schedule[0].strategy_id == "s1");
    CHECK(schedule[1].strategy_id == "s3");
    CHECK(schedule[0].run_time == 1.0);
    CHECK(schedule[1].run_time == 1.0);
  }

  SUBCASE("zero start strategies means an empty schedule") {
    CHECK(select_start_strategies({solved_run("a", "s1", 0.5)}, 0, 1.0).empty());
  }

  SUBCASE("selection stops once nothing new is covered") {
    const std::vector<RunRecord> log = {
        solved_run("a", "s1", 0.5),
        solved_run("a", "s2", 0.7),
        solved_run("b", "s2", 0.7),
    };
    const StartSchedule schedule = select_start_strategies(log, 10, 1.0);
    CHECK(schedule.size() == 1);  // s2 alone covers everything
    CHECK(schedule[0].strategy_id == "s2");
  }

  SUBCASE("only solves within the start window count") {
    const std::vector<RunRecord> log = {
        solved_run("a", "s1", 5.0),   // too slow for the window
        unsolved_run("b", "s1"),
        solved_run("b", "s2", 0.5),
    };
    const StartSchedule schedule = select_start_strategies(log, 3, 1.0);
    REQUIRE(schedule.size() == 1);
    CHECK(schedule[0].strategy_id == "s2");
  }

  SUBCASE("coverage ties break toward faster, then lexicographic") {
    const std::vector<RunRecord> tie_log = {
        solved_run("a", "slow", 0.9), solved_run("a", "quick", 0.2),
    };
    CHECK(select_start_strategies(tie_log, 1, 1.0)[0].strategy_id == "quick");

    const std::vector<RunRecord> exact_log = {
        solved_run("a", "s_b", 0.5), solved_run("a", "s_a", 0.5),
    };
    CHECK(select_start_strategies(exact_log, 1, 1.0)[0].strategy_id == "s_a");
  }

  SUBCASE("random instances match an independent greedy oracle") {
    Rng rng(71);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<RunRecord> log;
      std::map<std::string, std::map<std::string, double>> cover;  // sid -> problem -> t
      for (int s = 0; s < 10; ++s) {
        for (int p = 0; p < 20; ++p) {
          if (unit_draw(rng) < 0.35) {
            const double t = 0.1 + unit_draw(rng) * 2.0;  // some beyond the 1 s window
            const std::string sid = "s" + std::to_string(s);
            const std::string pid = "p" + std::to_string(p);
            log.push_back(solved_run(pid, sid, t));
            if (t <= 1.0) cover[sid][pid] = t;
          }
        }
      }
      const int n_start = 1 + static_cast<int>(uniform_index(rng, 6));
      const StartSchedule schedule = select_start_strategies(log, n_start, 1.0);

      // Greedy reimplementation over the cover sets.
      std::vector<std::string> expected;
      std::set<std::string> covered;
      std::set<std::string> used;
      for (int pick = 0; pick < n_start; ++pick) {
        std::string arg;
        std::size_t arg_new = 0;
        double arg_total = 0.0;
        for (const auto& [sid, problems] : cover) {
          if (used.count(sid)) continue;
          std::size_t fresh = 0;
          double total = 0.0;
          for (const auto& [pid, t] : problems) {
            if (!covered.count(pid)) {
              ++fresh;
              total += t;
            }
          }
          if (fresh == 0) continue;
          if (arg.empty() || fresh > arg_new ||
              (fresh == arg_new && (total < arg_total || (total == arg_total && sid < arg)))) {
            arg = sid;
            arg_new = fresh;
            arg_total = total;
          }
        }
        if (arg.empty()) break;
        expected.push_back(arg);
        used.insert(arg);
        for (const auto& [pid, t] : cover[arg]) covered.insert(pid);
      }

      REQUIRE(schedule.size() == expected.size());
      for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(schedule[i].strategy_id == expected[i]);
      }
    }
  }
}

TEST_CASE("model building filters, biases and fits per strategy") {
  // Deterministic 30-problem, 4-strategy corpus.
  const int n_problems = 30;
  std::vector<Strategy> strategies;
  for (int k = 0; k < 4; ++k) {
    strategies.push_back(make_strategy({}, {{"mode", "v" + std::to_string(k)}}));
  }

  std::vector<RunRecord> log;
  for (int k = 0; k < 4; ++k) {
    for (int i = 0; i < n_problems; ++i) {
      const std::string pid = "p" + std::to_string(i);
      if ((i + k) % 3 == 0) {
        log.push_back(unsolved_run(pid, strategies[static_cast<std::size_t>(k)].id));
      } else {
        const double t = 0.4 + ((i * 7 + k * 13) % 40) / 10.0;
        log.push_back(solved_run(pid, strategies[static_cast<std::size_t>(k)].id, t));
      }
    }
  }

  std::map<std::string, Eigen::VectorXd> features;
  Rng rng(81);
  for (int i = 0; i < n_problems; ++i) {
    features["p" + std::to_string(i)] = random_vector(rng, 4, 0.0, 100.0);
  }
  std::vector<FeatureVector> train;
  for (const auto& [pid, v] : features) train.push_back({pid, v});
  const NormalizationStats stats = fit_normalization(train);

  Settings settings;
  settings.cpu_bias = 1.0;
  settings.cv_folds = 3;
  settings.min_training_size = 5;
  settings.rng_seed = 7;

  const StartSchedule schedule = select_start_strategies(log, 2, 1.0);
  REQUIRE(!schedule.empty());
  const auto models = build_models(strategies, log, features, stats, schedule, settings);
  REQUIRE(!models.empty());

  // Set-algebra oracle: covered problems from the schedule, then per-strategy
  // survivors, recomputed with plain loops over the raw log.
  std::set<std::string> covered;
  for (const auto& entry : schedule) {
    for (const auto& rec : log) {
      if (rec.solved && rec.strategy_id == entry.strategy_id &&
          rec.wall_seconds <= entry.run_time) {
        covered.insert(rec.problem);
      }
    }
  }
  for (const auto& s : strategies) {
    std::set<std::string> expected_ids;
    std::map<std::string, double> expected_time;
    for (const auto& rec : log) {
      if (rec.solved && rec.strategy_id == s.id && !covered.count(rec.problem)) {
        expected_ids.insert(rec.problem);
        expected_time[rec.problem] = rec.wall_seconds;
      }
    }
    if (expected_ids.empty()) {
      CHECK(models.count(s.id) == 0);
      continue;
    }
    REQUIRE(models.count(s.id) == 1);
    const PredictionModel& model = models.at(s.id);
    CHECK(model.train_ids ==
          std::vector<std::string>(expected_ids.begin(), expected_ids.end()));

    // Targets carry the configured bias; clamps are the biased extremes.
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (Eigen::Index i = 0; i < model.Y.size(); ++i) {
      const std::string& pid = model.train_ids[static_cast<std::size_t>(i)];
      CHECK(model.Y[i] == expected_time.at(pid) + 1.0);
      lo = std::min(lo, model.Y[i]);
      hi = std::max(hi, model.Y[i]);
      CHECK(model.X.row(i).transpose() == normalize(features.at(pid), stats));
    }
    CHECK(model.min_time == lo);
    CHECK(model.max_time == hi);

    // Fitted weights satisfy the vanishing-gradient property.
    const Eigen::MatrixXd K = kernel_matrix(model.X, model.sigma);
    const Eigen::VectorXd grad =
        -2.0 * K * (model.Y - K * model.A) + 2.0 * model.lambda * (K * model.A);
    CHECK(grad.lpNorm<Eigen::Infinity>() <= 1e-6 * static_cast<double>(model.rows()));
  }

  SUBCASE("rebuilding with the same seed is bit-identical") {
    const auto again = build_models(strategies, log, features, stats, schedule, settings);
    REQUIRE(again.size() == models.size());
    for (const auto& [id, model] : models) {
      REQUIRE(again.count(id) == 1);
      CHECK(again.at(id).A == model.A);
      CHECK(again.at(id).sigma == model.sigma);
      CHECK(again.at(id).lambda == model.lambda);
    }
  }

  SUBCASE("a strategy whose solves are all covered is dropped") {
    Strategy shadow = make_strategy({}, {{"mode", "v0"}});
    // Build a tiny log where `shadow` only solves problems the schedule covers.
    std::vector<RunRecord> small_log = {
        solved_run("q1", "starter", 0.5),
        solved_run("q1", shadow.id, 2.0),
        solved_run("q2", "starter", 0.5),
    };
    StartSchedule start = {{"starter", 1.0}};
    std::map<std::string, Eigen::VectorXd> f2 = {{"q1", Eigen::Vector2d(0, 1)},
                                                 {"q2", Eigen::Vector2d(1, 0)}};
    const NormalizationStats st2 = fit_normalization({{"q1", f2["q1"]}, {"q2", f2["q2"]}});
    const auto result = build_models({shadow}, small_log, f2, st2, start, settings);
    CHECK(result.empty());
  }

  SUBCASE("without cross-validation the first grid entries are used") {
    Settings plain = settings;
    plain.crossvalidate = false;
    plain.regularization_grid = {0.25, 1.0};
    plain.kernel_grid = {3.0, 1.0};
    const auto result = build_models(strategies, log, features, stats, schedule, plain);
    for (const auto& [id, model] : result) {
      CHECK(model.lambda == 0.25);
      CHECK(model.sigma == 3.0);
    }
  }

  SUBCASE("too few rows for the fold count also skips the search") {
    Settings plain = settings;
    plain.cv_folds = 100;  // larger than any training set here
    plain.regularization_grid = {0.5};
    plain.kernel_grid = {2.0};
    const auto result = build_models(strategies, log, features, stats, schedule, plain);
    REQUIRE(!result.empty());
    for (const auto& [id, model] : result) {
      CHECK(model.lambda == 0.5);
      CHECK(model.sigma == 2.0);
    }
  }

  SUBCASE("a solved problem without features is an error") {
    std::map<std::string, Eigen::VectorXd> incomplete = features;
    incomplete.erase("p1");
    CHECK_ERROR(build_models(strategies, log, incomplete, stats, schedule, settings),
                Errc::extractor_failure);
  }
}
