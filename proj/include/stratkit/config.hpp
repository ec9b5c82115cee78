#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace stratkit {

struct Strategy;

// How parameter assignments are rendered on the solver command line.
enum class InvocationFormat { EStyle, LeoStyle, SatallaxStyle };

enum class FeatureMode { External, Builtin };

// Parsed [ATP Settings] section of the solver config.
struct SolverSpec {
  std::string binary_path;
  std::string time_flag;     // empty: no time argument is passed
  std::string problem_flag;  // empty: problem path appended bare
  InvocationFormat format = InvocationFormat::EStyle;
  std::vector<std::string> default_args;
  std::string success_marker;  // empty: exit status 0 alone counts as solved
};

// The declared tunable parameters of a solver.
struct ParameterSpace {
  std::set<std::string> boolean_params;
  std::map<std::string, std::vector<std::string>> list_params;

  bool empty() const { return boolean_params.empty() && list_params.empty(); }
};

struct Settings {
  // [Settings]
  std::string tptp_dir;
  std::string tmp_dir = "tmp";
  int cores = 1;
  std::string results_dir = "results";
  std::string model_dir = "models";
  std::string tmp_results_dir = "tmp_results";
  std::string tmp_model_dir = "tmp_models";
  bool clear = false;
  bool log_to_file = false;
  std::string log_file = "stratkit.log";
  std::string solver_config = "ATP.ini";
  bool mock_solver = false;
  std::string mock_solver_file;

  // [Search]
  double search_time_limit = 10.0;  // seconds per run during search
  std::string problems_file;        // required
  bool full_time = false;
  bool try_with_new_default_time = false;
  int walks = 10;        // strategies generated per local-search step
  int walk_length = 3;   // parameter changes per generated strategy
  std::string seed_strategies_file = "strategies.ini";

  // [Learn]
  FeatureMode feature_mode = FeatureMode::Builtin;
  std::string feature_extractor;
  std::vector<std::string> feature_tokens = {"&", "|", "=", "!", "?"};
  std::string features_file = "features.csv";
  std::string strategies_file;  // defaults to <ResultsDir>/strategies.ini
  std::vector<double> regularization_grid = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
  std::vector<double> kernel_grid = {0.1, 0.5, 1.0, 2.0, 5.0, 10.0};
  bool crossvalidate = true;
  int cv_folds = 10;
  int start_strategies = 10;
  double start_strategy_time = 1.0;
  double cpu_bias = 0.0;
  double tolerance = 1.0;
  int min_training_size = 5;
  std::uint64_t rng_seed = 0;

  // [Run]
  double cpu_speed_ratio = 1.0;
  double min_run_time = 0.1;
  std::string output_file;
};

// Solver config (ATP.ini layout): [ATP Settings] plus the
// [Boolean Parameters] / [List Parameters] sections.
std::pair<SolverSpec, ParameterSpace> parse_solver_config(const std::string& text);
std::string serialize_solver_config(const SolverSpec& spec, const ParameterSpace& space);

// Framework settings (setup.ini layout).
Settings parse_settings(const std::string& text);
std::string serialize_settings(const Settings& settings);

// Strategy definitions (strategies.ini layout): one section per strategy.
// Parameters not assigned in a section default to OFF for booleans and the
// first allowed value for list parameters.
std::vector<Strategy> parse_strategies(const std::string& text, const ParameterSpace& space);
std::string serialize_strategies(const std::vector<Strategy>& strategies, const ParameterSpace& space);

// Hash of the learning-relevant settings; written into the model store
// manifest so `run` can detect config drift since training.
std::string settings_fingerprint(const Settings& settings);

}  // namespace stratkit
