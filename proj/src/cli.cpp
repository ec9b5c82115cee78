#include "stratkit/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "stratkit/config.hpp"
#include "stratkit/error.hpp"
#include "stratkit/features.hpp"
#include "stratkit/finder.hpp"
#include "stratkit/learner.hpp"
#include "stratkit/runner.hpp"
#include "stratkit/scheduler.hpp"
#include "stratkit/store.hpp"
#include "stratkit/util.hpp"

namespace stratkit {

namespace {

struct Loaded {
  Settings settings;
  SolverSpec spec;
  ParameterSpace space;
};

// Diagnostics go to stderr and, when configured, to the log file; stdout is
// reserved for the documented result lines.
class Logger {
 public:
  explicit Logger(const Settings& settings)
      : path_(settings.log_to_file ? settings.log_file : "") {}

  void line(const std::string& message) const {
    std::fprintf(stderr, "%s\n", message.c_str());
    if (path_.empty()) return;
    FILE* f = std::fopen(path_.c_str(), "a");
    if (f != nullptr) {
      std::fprintf(f, "%s\n", message.c_str());
      std::fclose(f);
    }
  }

 private:
  std::string path_;
};

Loaded load_configs(const std::string& config_path, const CliOverrides& overrides) {
  Loaded out;
  out.settings = parse_settings(read_file(config_path));
  if (overrides.seed) out.settings.rng_seed = *overrides.seed;
  std::tie(out.spec, out.space) = parse_solver_config(read_file(out.settings.solver_config));
  return out;
}

std::vector<std::string> load_problems(const Settings& settings) {
  std::istringstream in(read_file(settings.problems_file));
  std::vector<std::string> problems;
  std::string line;
  while (std::getline(in, line)) {
    const std::string p = trim(line);
    if (p.empty() || p[0] == '#') continue;
    problems.push_back(p);
  }
  if (problems.empty()) {
    throw Error(Errc::bad_value, settings.problems_file + " lists no problems");
  }
  return problems;
}

std::unique_ptr<Solver> make_solver(const Loaded& cfg, const std::string& log_dir) {
  if (cfg.settings.mock_solver) {
    if (cfg.settings.mock_solver_file.empty()) {
      throw Error(Errc::missing_key, "MockSolverFile (required when MockSolver = True)");
    }
    return MockSolver::from_file(cfg.settings.mock_solver_file);
  }
  return std::make_unique<ProcessSolver>(cfg.spec, cfg.settings.tmp_dir, log_dir);
}

int config_error(const std::exception& e) {
  std::fprintf(stderr, "configuration error: %s\n", e.what());
  return kExitConfigError;
}

int runtime_error_exit(const std::exception& e) {
  std::fprintf(stderr, "error: %s\n", e.what());
  return kExitRuntimeError;
}

}  // namespace

int cmd_find_strategies(const std::string& config_path, const CliOverrides& overrides) {
  Loaded cfg;
  std::vector<std::string> problems;
  std::vector<Strategy> seeds;
  FinderConfig finder_cfg;
  std::unique_ptr<RunStore> store;
  std::unique_ptr<StrategyStore> registry;
  std::unique_ptr<Solver> solver;

  try {
    cfg = load_configs(config_path, overrides);
    const Settings& s = cfg.settings;
    problems = load_problems(s);

    store = std::make_unique<RunStore>(s.results_dir + "/runs.csv");
    registry = std::make_unique<StrategyStore>(s.results_dir + "/evaluated.ini", cfg.space);
    if (s.clear) {
      store->clear();
      registry->clear();
    }

    finder_cfg.tolerance = s.tolerance;
    finder_cfg.t_max = s.search_time_limit;
    finder_cfg.walks = s.walks;
    finder_cfg.walk_length = s.walk_length;
    finder_cfg.cores = s.cores;

    if (s.try_with_new_default_time) {
      // Seeds come from the earlier short-limit search phase.
      RunStore tmp_store(s.tmp_results_dir + "/runs.csv");
      StrategyStore tmp_registry(s.tmp_results_dir + "/evaluated.ini", cfg.space);
      if (tmp_store.records().empty()) {
        throw Error(Errc::bad_value, s.tmp_results_dir +
                                         " has no runs; run the short search phase first "
                                         "(TryWithNewDefaultTime reuses its results)");
      }
      for (const auto& id : select_preselected(tmp_store.records(), s.tolerance)) {
        seeds.push_back(tmp_registry.get(id));
      }
      if (!s.full_time) {
        // Verify each problem at (roughly) its known best time instead of
        // the full limit.
        std::map<std::string, double> best;
        for (const auto& rec : tmp_store.records()) {
          if (!rec.solved) continue;
          const auto it = best.find(rec.problem);
          if (it == best.end() || rec.wall_seconds < it->second) best[rec.problem] = rec.wall_seconds;
        }
        for (const auto& [p, t] : best) {
          finder_cfg.limit_overrides[p] = std::max(std::ceil(t), 1.0);
        }
      }
    } else {
      seeds = parse_strategies(read_file(s.seed_strategies_file), cfg.space);
    }

    solver = make_solver(cfg, s.results_dir + "/logs");
  } catch (const std::exception& e) {
    return config_error(e);
  }

  try {
    const Settings& s = cfg.settings;
    const Logger log(s);
    Rng rng(s.rng_seed);

    const SearchOutcome outcome =
        find_strategies(problems, seeds, finder_cfg, cfg.space, *solver, *store, *registry, rng);
    log.line("search finished: " + std::to_string(outcome.best.size()) + "/" +
             std::to_string(problems.size()) + " problems solved, " +
             std::to_string(outcome.runs_launched) + " solver runs, " +
             std::to_string(outcome.cache_hits) + " replayed from the store");

    std::vector<Strategy> selected;
    for (const auto& id : select_preselected(store->records(), s.tolerance)) {
      selected.push_back(registry->get(id));
    }
    if (s.full_time || !s.try_with_new_default_time) {
      // Complete the training matrix: every kept strategy on every problem
      // at the full limit.
      rerun_full_time(selected, problems, s.search_time_limit, *solver, *store, s.cores);
      selected.clear();
      for (const auto& id : select_preselected(store->records(), s.tolerance)) {
        selected.push_back(registry->get(id));
      }
    }

    const std::filesystem::path out_path(s.strategies_file);
    if (!out_path.parent_path().empty()) {
      std::error_code ec;
      std::filesystem::create_directories(out_path.parent_path(), ec);
    }
    write_file(s.strategies_file, serialize_strategies(selected, cfg.space));
    log.line("kept " + std::to_string(selected.size()) + " strategies -> " + s.strategies_file);
    return kExitSuccess;
  } catch (const std::exception& e) {
    return runtime_error_exit(e);
  }
}

int cmd_learn(const std::string& config_path, const CliOverrides& overrides) {
  Loaded cfg;
  std::vector<std::string> problems;
  std::vector<Strategy> preselected;
  std::unique_ptr<RunStore> store;
  std::unique_ptr<StrategyStore> registry;

  try {
    cfg = load_configs(config_path, overrides);
    const Settings& s = cfg.settings;
    problems = load_problems(s);
    store = std::make_unique<RunStore>(s.results_dir + "/runs.csv");
    registry = std::make_unique<StrategyStore>(s.results_dir + "/evaluated.ini", cfg.space);
    preselected = parse_strategies(read_file(s.strategies_file), cfg.space);
  } catch (const std::exception& e) {
    return config_error(e);
  }

  try {
    const Settings& s = cfg.settings;
    const Logger log(s);
    const std::vector<RunRecord>& records = store->records();

    bool any_solved = false;
    for (const auto& rec : records) any_solved = any_solved || rec.solved;
    if (!any_solved) {
      log.line("no solvable training problems in " + store->path());
      return kExitRuntimeError;
    }

    const auto raw_features = gather_features(problems, s);
    std::vector<FeatureVector> train;
    train.reserve(problems.size());
    for (const auto& p : problems) train.push_back({p, raw_features.at(p)});
    const NormalizationStats stats = fit_normalization(train);

    const StartSchedule schedule =
        select_start_strategies(records, s.start_strategies, s.start_strategy_time);
    const auto models = build_models(preselected, records, raw_features, stats, schedule, s);

    ModelStore out;
    out.dimension = stats.dimension();
    out.stats = stats;
    out.start_schedule = schedule;
    out.settings_fingerprint = settings_fingerprint(s);
    out.full_time_limit = s.search_time_limit;
    out.models = models;

    // Solve times per problem for every preselected strategy, biased the
    // same way as the model targets; the scheduler's update filter reads
    // these.
    std::set<std::string> kept_ids;
    for (const auto& st : preselected) kept_ids.insert(st.id);
    std::map<std::string, std::map<std::string, double>> best_solved;
    for (const auto& rec : records) {
      if (!rec.solved || !kept_ids.count(rec.strategy_id)) continue;
      auto& per_strategy = best_solved[rec.problem];
      const auto it = per_strategy.find(rec.strategy_id);
      if (it == per_strategy.end() || rec.wall_seconds + s.cpu_bias < it->second) {
        per_strategy[rec.strategy_id] = rec.wall_seconds + s.cpu_bias;
      }
    }
    out.solved_times = std::move(best_solved);

    // Globally best = solves the most problems; the scheduler's last resort.
    std::map<std::string, std::set<std::string>> problems_solved;
    for (const auto& [problem, per_strategy] : out.solved_times) {
      for (const auto& [sid, t] : per_strategy) problems_solved[sid].insert(problem);
    }
    for (const auto& [sid, solved] : problems_solved) {
      if (out.global_best_strategy.empty() ||
          solved.size() > problems_solved[out.global_best_strategy].size()) {
        out.global_best_strategy = sid;
      }
    }

    for (const auto& st : preselected) out.strategies[st.id] = st;
    for (const auto& entry : schedule) {
      if (!out.strategies.count(entry.strategy_id)) {
        out.strategies[entry.strategy_id] = registry->get(entry.strategy_id);
      }
    }

    save_models(out, s.model_dir);
    log.line("fitted " + std::to_string(out.models.size()) + " models, " +
             std::to_string(schedule.size()) + " start strategies -> " + s.model_dir);
    return kExitSuccess;
  } catch (const std::exception& e) {
    return runtime_error_exit(e);
  }
}

int cmd_run(const std::string& config_path, const std::string& problem, double budget,
            const CliOverrides& overrides) {
  Loaded cfg;
  ModelStore models;
  std::unique_ptr<Solver> solver;

  try {
    cfg = load_configs(config_path, overrides);
    if (problem.empty()) throw Error(Errc::bad_value, "no problem given");
    if (!(budget > 0.0)) throw Error(Errc::bad_value, "time budget must be > 0");
    models = load_models(cfg.settings.model_dir, settings_fingerprint(cfg.settings),
                         overrides.force);
    solver = make_solver(cfg, cfg.settings.results_dir + "/logs");
  } catch (const std::exception& e) {
    return config_error(e);
  }

  try {
    const Settings& s = cfg.settings;
    const SolveResult result = solve(problem, budget, models, s, *solver);

    if (result.solved) {
      std::printf("SOLVED %s %s %s\n", problem.c_str(), result.solved_by.c_str(),
                  format_double(result.time_used).c_str());
    } else {
      std::printf("UNSOLVED %s %s\n", problem.c_str(), format_double(result.time_used).c_str());
    }

    if (!s.output_file.empty()) {
      std::string lines;
      for (const auto& ev : result.event_log) {
        lines += problem + "," + ev.kind + "," + ev.strategy_id + "," +
                 format_double(ev.allotted) + "," + format_double(ev.elapsed) + "," +
                 (ev.solved ? "1" : "0") + "\n";
      }
      FILE* f = std::fopen(s.output_file.c_str(), "a");
      if (f == nullptr) throw Error(Errc::io_failure, s.output_file);
      std::fwrite(lines.data(), 1, lines.size(), f);
      std::fclose(f);
    }
    return result.solved ? kExitSuccess : kExitUnsolved;
  } catch (const std::exception& e) {
    return runtime_error_exit(e);
  }
}

}  // namespace stratkit
