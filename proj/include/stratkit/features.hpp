#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "stratkit/config.hpp"

namespace stratkit {

struct FeatureVector {
  std::string problem;
  Eigen::VectorXd values;
};

// Per-feature min/max over the training corpus.
struct NormalizationStats {
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  int dimension() const { return static_cast<int>(min.size()); }
};

// Resolves a problem id from the problems file to a filesystem path:
// absolute paths pass through, otherwise tptp_dir is prepended when set.
std::string resolve_problem_path(const Settings& settings, const std::string& problem);

// Syntactic fallback features of a problem file: byte count, line count, one
// count per configured token, and the longest line's length.
Eigen::VectorXd builtin_features(const std::string& contents,
                                 const std::vector<std::string>& tokens);

// Extracts the feature vector for one problem, via the configured external
// extractor command or the builtin surrogate. expected_dimension >= 0
// enforces the corpus-wide dimension.
Eigen::VectorXd extract_features(const std::string& problem, const Settings& settings,
                                 int expected_dimension = -1);

NormalizationStats fit_normalization(const std::vector<FeatureVector>& train);

// (v - min) / (max - min) per feature; constant features map to 0. Values
// outside the training range are not clamped.
Eigen::VectorXd normalize(const Eigen::VectorXd& v, const NormalizationStats& stats);

// Feature cache: CSV lines `problem,v1,...,vn`.
std::map<std::string, Eigen::VectorXd> load_features_csv(const std::string& path);
void save_features_csv(const std::string& path,
                       const std::map<std::string, Eigen::VectorXd>& features);

// Features for every listed problem: cached vectors are reused, missing ones
// are extracted (in parallel for external extractors) and the cache file is
// rewritten when anything new was computed.
std::map<std::string, Eigen::VectorXd> gather_features(const std::vector<std::string>& problems,
                                                       const Settings& settings);

}  // namespace stratkit
