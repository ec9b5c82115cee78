#include "stratkit/config.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "stratkit/error.hpp"
#include "stratkit/ini.hpp"
#include "stratkit/strategy.hpp"
#include "stratkit/util.hpp"

namespace stratkit {

namespace {

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "True" || value == "true") return true;
  if (value == "False" || value == "false") return false;
  throw Error(Errc::bad_value, key + ": expected True or False, got '" + value + "'");
}

const char* bool_str(bool value) { return value ? "True" : "False"; }

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::vector<std::string> parse_token_list(const std::string& key, const std::string& value) {
  std::vector<std::string> out;
  for (const auto& piece : split(value, ',')) {
    const std::string token = trim(piece);
    if (token.empty()) {
      throw Error(Errc::bad_value, key + ": empty entry in list '" + value + "'");
    }
    out.push_back(token);
  }
  if (out.empty()) throw Error(Errc::bad_value, key + ": list is empty");
  return out;
}

std::vector<double> parse_grid(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& token : parse_token_list(key, value)) {
    const double v = parse_double(token);
    if (!(v > 0.0)) {
      throw Error(Errc::bad_value, key + ": grid values must be positive, got '" + token + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::string join_grid(const std::vector<double>& grid) {
  std::vector<std::string> parts;
  parts.reserve(grid.size());
  for (double v : grid) parts.push_back(format_double(v));
  return join(parts, ",");
}

// Optional-section view: all reads fall back to the default when the whole
// section is absent.
struct SectionView {
  const IniSection* sec = nullptr;

  bool has(const std::string& key) const { return sec != nullptr && sec->has(key); }
  const std::string& get(const std::string& key) const { return sec->get(key); }
};

void reject_unknown_keys(const IniSection& sec, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : sec.entries) {
    if (!allowed.count(key)) {
      throw Error(Errc::unknown_key, "key '" + key + "' in section [" + sec.name + "]");
    }
  }
}

std::string read_string(const SectionView& sec, const std::string& key, std::string fallback) {
  return sec.has(key) ? sec.get(key) : std::move(fallback);
}

bool read_bool(const SectionView& sec, const std::string& key, bool fallback) {
  return sec.has(key) ? parse_bool(key, sec.get(key)) : fallback;
}

int read_count(const SectionView& sec, const std::string& key, int fallback, int min_value) {
  if (!sec.has(key)) return fallback;
  const long v = parse_long(sec.get(key));
  if (v < min_value || v > 1'000'000'000L) {
    throw Error(Errc::bad_value, key + " = " + sec.get(key) + " (must be >= " +
                                     std::to_string(min_value) + ")");
  }
  return static_cast<int>(v);
}

double read_seconds(const SectionView& sec, const std::string& key, double fallback,
                    bool strictly_positive) {
  if (!sec.has(key)) return fallback;
  const double v = parse_double(sec.get(key));
  if (strictly_positive ? !(v > 0.0) : !(v >= 0.0)) {
    throw Error(Errc::bad_value, key + " = " + sec.get(key) + " (must be " +
                                     (strictly_positive ? "> 0" : ">= 0") + ")");
  }
  return v;
}

}  // namespace

std::pair<SolverSpec, ParameterSpace> parse_solver_config(const std::string& text) {
  const IniFile file = parse_ini(text);
  for (const auto& sec : file.sections) {
    if (sec.name != "ATP Settings" && sec.name != "Boolean Parameters" &&
        sec.name != "List Parameters") {
      throw Error(Errc::unknown_key, "section [" + sec.name + "]");
    }
  }

  const IniSection& atp = file.section("ATP Settings");
  reject_unknown_keys(atp, {"binary", "time", "problem", "strategy", "default", "success"});

  SolverSpec spec;
  spec.binary_path = atp.get("binary");
  if (spec.binary_path.empty()) throw Error(Errc::bad_value, "binary: path is empty");
  spec.time_flag = atp.get_or("time", "");
  spec.problem_flag = atp.get_or("problem", "");
  const std::string style = atp.get("strategy");
  if (style == "E") {
    spec.format = InvocationFormat::EStyle;
  } else if (style == "LEO") {
    spec.format = InvocationFormat::LeoStyle;
  } else if (style == "Satallax") {
    spec.format = InvocationFormat::SatallaxStyle;
  } else {
    throw Error(Errc::bad_enum, "strategy = " + style + " (expected E, LEO or Satallax)");
  }
  spec.default_args = split_ws(atp.get_or("default", ""));
  spec.success_marker = atp.get_or("success", "");

  ParameterSpace space;
  if (file.has_section("Boolean Parameters")) {
    for (const auto& [name, value] : file.section("Boolean Parameters").entries) {
      if (!value.empty()) {
        throw Error(Errc::bad_value,
                    "boolean parameter '" + name + "' carries a value; declare it as '" + name + " ='");
      }
      space.boolean_params.insert(name);
    }
  }
  if (file.has_section("List Parameters")) {
    for (const auto& [name, value] : file.section("List Parameters").entries) {
      if (space.boolean_params.count(name)) {
        throw Error(Errc::duplicate_key, "parameter '" + name + "' declared as both boolean and list");
      }
      if (trim(value).empty()) {
        throw Error(Errc::empty_value_list, "list parameter '" + name + "' allows no values");
      }
      std::vector<std::string> values = parse_token_list(name, value);
      std::set<std::string> seen;
      for (const auto& v : values) {
        if (!seen.insert(v).second) {
          throw Error(Errc::duplicate_key, "value '" + v + "' repeated for parameter '" + name + "'");
        }
      }
      space.list_params.emplace(name, std::move(values));
    }
  }
  return {std::move(spec), std::move(space)};
}

std::string serialize_solver_config(const SolverSpec& spec, const ParameterSpace& space) {
  IniFile file;
  IniSection atp{"ATP Settings", {}};
  atp.entries.emplace_back("binary", spec.binary_path);
  atp.entries.emplace_back("time", spec.time_flag);
  atp.entries.emplace_back("problem", spec.problem_flag);
  const char* style = spec.format == InvocationFormat::EStyle     ? "E"
                      : spec.format == InvocationFormat::LeoStyle ? "LEO"
                                                                  : "Satallax";
  atp.entries.emplace_back("strategy", style);
  atp.entries.emplace_back("default", join(spec.default_args, " "));
  atp.entries.emplace_back("success", spec.success_marker);
  file.sections.push_back(std::move(atp));

  IniSection booleans{"Boolean Parameters", {}};
  for (const auto& name : space.boolean_params) booleans.entries.emplace_back(name, "");
  file.sections.push_back(std::move(booleans));

  IniSection lists{"List Parameters", {}};
  for (const auto& [name, values] : space.list_params) {
    lists.entries.emplace_back(name, join(values, ","));
  }
  file.sections.push_back(std::move(lists));
  return serialize_ini(file);
}

Settings parse_settings(const std::string& text) {
  const IniFile file = parse_ini(text);
  for (const auto& sec : file.sections) {
    if (sec.name != "Settings" && sec.name != "Search" && sec.name != "Learn" &&
        sec.name != "Run") {
      throw Error(Errc::unknown_key, "section [" + sec.name + "]");
    }
  }

  SectionView settings, search, learn, run;
  if (file.has_section("Settings")) settings.sec = &file.section("Settings");
  if (file.has_section("Search")) search.sec = &file.section("Search");
  if (file.has_section("Learn")) learn.sec = &file.section("Learn");
  if (file.has_section("Run")) run.sec = &file.section("Run");

  if (settings.sec) {
    reject_unknown_keys(*settings.sec,
                        {"TPTP", "TmpDir", "Cores", "ResultsDir", "ModelDir", "TmpResultsDir",
                         "TmpModelDir", "Clear", "LogToFile", "LogFile", "ATP", "MockSolver",
                         "MockSolverFile"});
  }
  if (search.sec) {
    reject_unknown_keys(*search.sec, {"Time", "Problems", "FullTime", "TryWithNewDefaultTime",
                                      "Walks", "WalkLength", "Seeds"});
  }
  if (learn.sec) {
    reject_unknown_keys(*learn.sec,
                        {"Features", "FeatureExtractor", "FeatureTokens", "FeaturesFile",
                         "StrategiesFile", "RegularizationGrid", "KernelGrid", "CrossValidate",
                         "CrossValidationFolds", "StartStrategies", "StartStrategiesTime",
                         "CPUBias", "Tolerance", "MinTrainingSize", "Seed"});
  }
  if (run.sec) {
    reject_unknown_keys(*run.sec, {"CPUSpeedRatio", "MinRunTime", "OutputFile"});
  }

  Settings s;
  s.tptp_dir = read_string(settings, "TPTP", s.tptp_dir);
  s.tmp_dir = read_string(settings, "TmpDir", s.tmp_dir);
  s.cores = read_count(settings, "Cores", s.cores, 1);
  s.results_dir = read_string(settings, "ResultsDir", s.results_dir);
  s.model_dir = read_string(settings, "ModelDir", s.model_dir);
  s.tmp_results_dir = read_string(settings, "TmpResultsDir", s.tmp_results_dir);
  s.tmp_model_dir = read_string(settings, "TmpModelDir", s.tmp_model_dir);
  s.clear = read_bool(settings, "Clear", s.clear);
  s.log_to_file = read_bool(settings, "LogToFile", s.log_to_file);
  s.log_file = read_string(settings, "LogFile", s.log_file);
  s.solver_config = read_string(settings, "ATP", s.solver_config);
  s.mock_solver = read_bool(settings, "MockSolver", s.mock_solver);
  s.mock_solver_file = read_string(settings, "MockSolverFile", s.mock_solver_file);

  s.search_time_limit = read_seconds(search, "Time", s.search_time_limit, true);
  if (!search.has("Problems")) {
    throw Error(Errc::missing_key, "Problems in section [Search]");
  }
  s.problems_file = search.get("Problems");
  s.full_time = read_bool(search, "FullTime", s.full_time);
  s.try_with_new_default_time = read_bool(search, "TryWithNewDefaultTime", s.try_with_new_default_time);
  s.walks = read_count(search, "Walks", s.walks, 1);
  s.walk_length = read_count(search, "WalkLength", s.walk_length, 0);
  s.seed_strategies_file = read_string(search, "Seeds", s.seed_strategies_file);

  if (learn.has("Features")) {
    const std::string mode = learn.get("Features");
    if (mode == "Builtin") {
      s.feature_mode = FeatureMode::Builtin;
    } else if (mode == "External") {
      s.feature_mode = FeatureMode::External;
    } else {
      throw Error(Errc::bad_enum, "Features = " + mode + " (expected Builtin or External)");
    }
  }
  s.feature_extractor = read_string(learn, "FeatureExtractor", s.feature_extractor);
  if (s.feature_mode == FeatureMode::External && s.feature_extractor.empty()) {
    throw Error(Errc::missing_key, "FeatureExtractor (required when Features = External)");
  }
  if (learn.has("FeatureTokens")) {
    s.feature_tokens = parse_token_list("FeatureTokens", learn.get("FeatureTokens"));
  }
  s.features_file = read_string(learn, "FeaturesFile", s.features_file);
  s.strategies_file = read_string(learn, "StrategiesFile", s.results_dir + "/strategies.ini");
  if (learn.has("RegularizationGrid")) {
    s.regularization_grid = parse_grid("RegularizationGrid", learn.get("RegularizationGrid"));
  }
  if (learn.has("KernelGrid")) {
    s.kernel_grid = parse_grid("KernelGrid", learn.get("KernelGrid"));
  }
  s.crossvalidate = read_bool(learn, "CrossValidate", s.crossvalidate);
  s.cv_folds = read_count(learn, "CrossValidationFolds", s.cv_folds, 2);
  s.start_strategies = read_count(learn, "StartStrategies", s.start_strategies, 0);
  s.start_strategy_time = read_seconds(learn, "StartStrategiesTime", s.start_strategy_time, false);
  if (learn.has("CPUBias")) s.cpu_bias = parse_double(learn.get("CPUBias"));
  s.tolerance = read_seconds(learn, "Tolerance", s.tolerance, false);
  s.min_training_size = read_count(learn, "MinTrainingSize", s.min_training_size, 1);
  if (learn.has("Seed")) {
    const long long v = parse_long(learn.get("Seed"));
    if (v < 0) throw Error(Errc::bad_value, "Seed must be >= 0");
    s.rng_seed = static_cast<std::uint64_t>(v);
  }

  s.cpu_speed_ratio = read_seconds(run, "CPUSpeedRatio", s.cpu_speed_ratio, true);
  s.min_run_time = read_seconds(run, "MinRunTime", s.min_run_time, false);
  s.output_file = read_string(run, "OutputFile", s.output_file);
  return s;
}

std::string serialize_settings(const Settings& s) {
  IniFile file;

  IniSection settings{"Settings", {}};
  settings.entries.emplace_back("TPTP", s.tptp_dir);
  settings.entries.emplace_back("TmpDir", s.tmp_dir);
  settings.entries.emplace_back("Cores", std::to_string(s.cores));
  settings.entries.emplace_back("ResultsDir", s.results_dir);
  settings.entries.emplace_back("ModelDir", s.model_dir);
  settings.entries.emplace_back("TmpResultsDir", s.tmp_results_dir);
  settings.entries.emplace_back("TmpModelDir", s.tmp_model_dir);
  settings.entries.emplace_back("Clear", bool_str(s.clear));
  settings.entries.emplace_back("LogToFile", bool_str(s.log_to_file));
  settings.entries.emplace_back("LogFile", s.log_file);
  settings.entries.emplace_back("ATP", s.solver_config);
  settings.entries.emplace_back("MockSolver", bool_str(s.mock_solver));
  settings.entries.emplace_back("MockSolverFile", s.mock_solver_file);
  file.sections.push_back(std::move(settings));

  IniSection search{"Search", {}};
  search.entries.emplace_back("Time", format_double(s.search_time_limit));
  search.entries.emplace_back("Problems", s.problems_file);
  search.entries.emplace_back("FullTime", bool_str(s.full_time));
  search.entries.emplace_back("TryWithNewDefaultTime", bool_str(s.try_with_new_default_time));
  search.entries.emplace_back("Walks", std::to_string(s.walks));
  search.entries.emplace_back("WalkLength", std::to_string(s.walk_length));
  search.entries.emplace_back("Seeds", s.seed_strategies_file);
  file.sections.push_back(std::move(search));

  IniSection learn{"Learn", {}};
  learn.entries.emplace_back("Features",
                             s.feature_mode == FeatureMode::Builtin ? "Builtin" : "External");
  learn.entries.emplace_back("FeatureExtractor", s.feature_extractor);
  learn.entries.emplace_back("FeatureTokens", join(s.feature_tokens, ","));
  learn.entries.emplace_back("FeaturesFile", s.features_file);
  learn.entries.emplace_back("StrategiesFile", s.strategies_file);
  learn.entries.emplace_back("RegularizationGrid", join_grid(s.regularization_grid));
  learn.entries.emplace_back("KernelGrid", join_grid(s.kernel_grid));
  learn.entries.emplace_back("CrossValidate", bool_str(s.crossvalidate));
  learn.entries.emplace_back("CrossValidationFolds", std::to_string(s.cv_folds));
  learn.entries.emplace_back("StartStrategies", std::to_string(s.start_strategies));
  learn.entries.emplace_back("StartStrategiesTime", format_double(s.start_strategy_time));
  learn.entries.emplace_back("CPUBias", format_double(s.cpu_bias));
  learn.entries.emplace_back("Tolerance", format_double(s.tolerance));
  learn.entries.emplace_back("MinTrainingSize", std::to_string(s.min_training_size));
  learn.entries.emplace_back("Seed", std::to_string(s.rng_seed));
  file.sections.push_back(std::move(learn));

  IniSection run{"Run", {}};
  run.entries.emplace_back("CPUSpeedRatio", format_double(s.cpu_speed_ratio));
  run.entries.emplace_back("MinRunTime", format_double(s.min_run_time));
  run.entries.emplace_back("OutputFile", s.output_file);
  file.sections.push_back(std::move(run));

  return serialize_ini(file);
}

std::vector<Strategy> parse_strategies(const std::string& text, const ParameterSpace& space) {
  const IniFile file = parse_ini(text);
  if (file.sections.empty()) {
    throw Error(Errc::no_strategies, "strategy file defines no strategies");
  }

  std::vector<Strategy> out;
  out.reserve(file.sections.size());
  for (const auto& sec : file.sections) {
    std::set<std::string> booleans;
    std::map<std::string, std::string> lists;
    for (const auto& [name, value] : sec.entries) {
      if (space.boolean_params.count(name)) {
        if (value == "True" || value == "true") {
          booleans.insert(name);
        } else if (value != "False" && value != "false") {
          throw Error(Errc::illegal_value, "'" + name + " = " + value + "' in strategy [" +
                                               sec.name + "] (boolean flags take True or False)");
        }
        continue;
      }
      const auto it = space.list_params.find(name);
      if (it == space.list_params.end()) {
        throw Error(Errc::unknown_parameter, "'" + name + "' in strategy [" + sec.name + "]");
      }
      if (std::find(it->second.begin(), it->second.end(), value) == it->second.end()) {
        throw Error(Errc::illegal_value, "'" + name + " = " + value + "' in strategy [" +
                                             sec.name + "] (value not in the allowed list)");
      }
      lists.emplace(name, value);
    }
    // Unassigned parameters take their defaults: booleans off, list
    // parameters on the first allowed value.
    for (const auto& [name, values] : space.list_params) {
      lists.emplace(name, values.front());
    }
    out.push_back(make_strategy(std::move(booleans), std::move(lists)));
  }
  return out;
}

std::string serialize_strategies(const std::vector<Strategy>& strategies,
                                 const ParameterSpace& space) {
  IniFile file;
  for (const auto& s : strategies) {
    IniSection sec{"Strategy_" + s.id, {}};
    for (const auto& name : space.boolean_params) {
      sec.entries.emplace_back(name, bool_str(s.boolean_flags.count(name) != 0));
    }
    for (const auto& [name, value] : s.list_values) {
      sec.entries.emplace_back(name, value);
    }
    file.sections.push_back(std::move(sec));
  }
  return serialize_ini(file);
}

std::string settings_fingerprint(const Settings& s) {
  std::string canon;
  canon += "feature_mode=";
  canon += s.feature_mode == FeatureMode::Builtin ? "Builtin" : "External";
  canon += "\nfeature_extractor=" + s.feature_extractor;
  canon += "\nfeature_tokens=" + join(s.feature_tokens, ",");
  canon += "\nregularization_grid=" + join_grid(s.regularization_grid);
  canon += "\nkernel_grid=" + join_grid(s.kernel_grid);
  canon += "\ncrossvalidate=";
  canon += bool_str(s.crossvalidate);
  canon += "\ncv_folds=" + std::to_string(s.cv_folds);
  canon += "\nstart_strategies=" + std::to_string(s.start_strategies);
  canon += "\nstart_strategy_time=" + format_double(s.start_strategy_time);
  canon += "\ncpu_bias=" + format_double(s.cpu_bias);
  canon += "\ntolerance=" + format_double(s.tolerance);
  canon += "\nmin_training_size=" + std::to_string(s.min_training_size);
  canon += "\nrng_seed=" + std::to_string(s.rng_seed);
  canon += "\nsearch_time_limit=" + format_double(s.search_time_limit);
  canon += "\n";
  return hex64(fnv1a(canon));
}

}  // namespace stratkit
