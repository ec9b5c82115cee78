#include "stratkit/features.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <thread>

#include "stratkit/error.hpp"
#include "stratkit/runner.hpp"
#include "stratkit/util.hpp"

namespace stratkit {

namespace {

constexpr double kExtractorTimeoutSeconds = 120.0;

std::size_t count_occurrences(const std::string& text, const std::string& token) {
  if (token.empty()) return 0;
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    ++count;
    pos += token.size();
  }
  return count;
}

Eigen::VectorXd parse_number_stream(const std::string& text, const std::string& origin) {
  std::string normalized = text;
  for (char& c : normalized) {
    if (c == ',' || c == '\t' || c == '\r' || c == '\n') c = ' ';
  }
  std::istringstream in(normalized);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    double v = 0.0;
    try {
      v = parse_double(token);
    } catch (const Error&) {
      throw Error(Errc::extractor_failure,
                  origin + ": non-numeric output token '" + token + "'");
    }
    if (!std::isfinite(v)) {
      throw Error(Errc::extractor_failure, origin + ": non-finite feature value");
    }
    values.push_back(v);
  }
  if (values.empty()) {
    throw Error(Errc::extractor_failure, origin + ": no feature values in output");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = values[i];
  return out;
}

}  // namespace

std::string resolve_problem_path(const Settings& settings, const std::string& problem) {
  if (problem.empty()) return problem;
  if (std::filesystem::path(problem).is_absolute() || settings.tptp_dir.empty()) {
    return problem;
  }
  return settings.tptp_dir + "/" + problem;
}

Eigen::VectorXd builtin_features(const std::string& contents,
                                 const std::vector<std::string>& tokens) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(3 + tokens.size()));
  v[0] = static_cast<double>(contents.size());

  std::size_t lines = 0;
  std::size_t max_line = 0;
  std::size_t current = 0;
  for (const char c : contents) {
    if (c == '\n') {
      ++lines;
      max_line = std::max(max_line, current);
      current = 0;
    } else {
      ++current;
    }
  }
  if (current > 0) {
    ++lines;
    max_line = std::max(max_line, current);
  }
  v[1] = static_cast<double>(lines);

  for (std::size_t t = 0; t < tokens.size(); ++t) {
    v[static_cast<Eigen::Index>(2 + t)] =
        static_cast<double>(count_occurrences(contents, tokens[t]));
  }
  v[v.size() - 1] = static_cast<double>(max_line);
  return v;
}

Eigen::VectorXd extract_features(const std::string& problem, const Settings& settings,
                                 int expected_dimension) {
  Eigen::VectorXd v;
  const std::string path = resolve_problem_path(settings, problem);
  if (settings.feature_mode == FeatureMode::Builtin) {
    v = builtin_features(read_file(path), settings.feature_tokens);
  } else {
    std::vector<std::string> argv;
    {
      std::istringstream in(settings.feature_extractor);
      std::string token;
      while (in >> token) argv.push_back(token);
    }
    if (argv.empty()) {
      throw Error(Errc::extractor_failure, "feature extractor command is empty");
    }
    argv.push_back(path);
    const CommandResult result = run_command(argv, kExtractorTimeoutSeconds);
    if (result.exit_code != 0) {
      throw Error(Errc::extractor_failure, argv[0] + " exited with " +
                                               std::to_string(result.exit_code) + " on " + path);
    }
    v = parse_number_stream(result.output, argv[0]);
  }
  if (expected_dimension >= 0 && v.size() != static_cast<Eigen::Index>(expected_dimension)) {
    throw Error(Errc::dimension_mismatch,
                problem + ": feature vector has " + std::to_string(v.size()) +
                    " entries, corpus dimension is " + std::to_string(expected_dimension));
  }
  return v;
}

NormalizationStats fit_normalization(const std::vector<FeatureVector>& train) {
  if (train.empty()) {
    throw Error(Errc::empty_training_set, "cannot fit normalization on zero problems");
  }
  const Eigen::Index n = train.front().values.size();
  NormalizationStats stats;
  stats.min = train.front().values;
  stats.max = train.front().values;
  for (const auto& fv : train) {
    if (fv.values.size() != n) {
      throw Error(Errc::dimension_mismatch,
                  fv.problem + ": expected dimension " + std::to_string(n) + ", got " +
                      std::to_string(fv.values.size()));
    }
    stats.min = stats.min.cwiseMin(fv.values);
    stats.max = stats.max.cwiseMax(fv.values);
  }
  return stats;
}

Eigen::VectorXd normalize(const Eigen::VectorXd& v, const NormalizationStats& stats) {
  if (v.size() != stats.min.size()) {
    throw Error(Errc::dimension_mismatch, "vector dimension " + std::to_string(v.size()) +
                                              " vs normalization dimension " +
                                              std::to_string(stats.min.size()));
  }
  Eigen::VectorXd out(v.size());
  for (Eigen::Index f = 0; f < v.size(); ++f) {
    const double range = stats.max[f] - stats.min[f];
    out[f] = range > 0.0 ? (v[f] - stats.min[f]) / range : 0.0;
  }
  return out;
}

std::map<std::string, Eigen::VectorXd> load_features_csv(const std::string& path) {
  std::map<std::string, Eigen::VectorXd> out;
  if (!std::filesystem::exists(path)) return out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() < 2) {
      throw Error(Errc::parse_error, path + ": feature line needs `problem,v1,...`");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(fields.size() - 1));
    for (std::size_t i = 1; i < fields.size(); ++i) {
      v[static_cast<Eigen::Index>(i - 1)] = parse_double(trim(fields[i]));
    }
    out[trim(fields[0])] = std::move(v);
  }
  return out;
}

void save_features_csv(const std::string& path,
                       const std::map<std::string, Eigen::VectorXd>& features) {
  std::string out;
  for (const auto& [problem, v] : features) {
    out += problem;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      out += ",";
      out += format_double(v[i]);
    }
    out += "\n";
  }
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  write_file(path, out);
}

std::map<std::string, Eigen::VectorXd> gather_features(const std::vector<std::string>& problems,
                                                       const Settings& settings) {
  std::map<std::string, Eigen::VectorXd> cache = load_features_csv(settings.features_file);

  std::vector<std::string> missing;
  for (const auto& p : problems) {
    if (!cache.count(p)) missing.push_back(p);
  }

  if (!missing.empty()) {
    std::vector<Eigen::VectorXd> fresh(missing.size());
    std::vector<std::string> errors(missing.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= missing.size()) return;
        try {
          fresh[i] = extract_features(missing[i], settings);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    };
    const std::size_t workers = std::min<std::size_t>(
        static_cast<std::size_t>(std::max(settings.cores, 1)), missing.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (!errors[i].empty()) {
        throw Error(Errc::extractor_failure, missing[i] + ": " + errors[i]);
      }
      cache[missing[i]] = std::move(fresh[i]);
    }
    save_features_csv(settings.features_file, cache);
  }

  std::map<std::string, Eigen::VectorXd> out;
  Eigen::Index dim = -1;
  for (const auto& p : problems) {
    const auto it = cache.find(p);
    if (it == cache.end()) {
      throw Error(Errc::extractor_failure, p + ": no feature vector available");
    }
    if (dim < 0) dim = it->second.size();
    if (it->second.size() != dim) {
      throw Error(Errc::dimension_mismatch,
                  p + ": dimension " + std::to_string(it->second.size()) +
                      " differs from corpus dimension " + std::to_string(dim) +
                      " (delete the features file to re-extract)");
    }
    out[p] = it->second;
  }
  return out;
}

}  // namespace stratkit
