#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stratkit/config.hpp"
#include "stratkit/util.hpp"

namespace stratkit {

// A full assignment of values to a solver's parameters: the set of boolean
// flags that are ON plus one chosen value per list parameter. The id is a
// content hash, so equal assignments always share an id.
struct Strategy {
  std::set<std::string> boolean_flags;
  std::map<std::string, std::string> list_values;
  std::string id;

  bool operator==(const Strategy& other) const {
    return boolean_flags == other.boolean_flags && list_values == other.list_values;
  }
};

std::string strategy_id(const std::set<std::string>& boolean_flags,
                        const std::map<std::string, std::string>& list_values);

Strategy make_strategy(std::set<std::string> boolean_flags,
                       std::map<std::string, std::string> list_values);

// Throws when the assignment does not fit the space (unknown parameter,
// value outside the allowed list, or an unassigned list parameter).
void validate_strategy(const Strategy& s, const ParameterSpace& space);

// Number of parameters on which two strategies differ.
int hamming_distance(const Strategy& a, const Strategy& b);

// One local-search step: uniformly pick a boolean flag or a list parameter
// with at least two allowed values, then toggle the flag or reassign the
// parameter to a uniformly chosen different value.
Strategy change_random_parameter(const Strategy& s, const ParameterSpace& space, Rng& rng);

// `walks` variations of s, each produced by `walk_length` sequential
// change_random_parameter steps.
std::vector<Strategy> create_random_strategies(const Strategy& s, int walks, int walk_length,
                                               const ParameterSpace& space, Rng& rng);

struct Invocation {
  std::vector<std::string> argv;  // argv[0] is the solver binary
  // Mode file for SatallaxStyle: (path, contents). The path already appears
  // in argv; the runner writes the file before spawning and removes it after.
  std::optional<std::pair<std::string, std::string>> aux_file;
};

Invocation format_invocation(const Strategy& s, const SolverSpec& spec,
                             const std::string& problem, double time_limit,
                             const std::string& tmp_dir = ".");

}  // namespace stratkit
