#include "stratkit/strategy.hpp"

#include <algorithm>
#include <cmath>

#include "stratkit/error.hpp"

namespace stratkit {

std::string strategy_id(const std::set<std::string>& boolean_flags,
                        const std::map<std::string, std::string>& list_values) {
  std::string canon;
  for (const auto& flag : boolean_flags) canon += "!" + flag + "\n";
  for (const auto& [name, value] : list_values) canon += name + "=" + value + "\n";
  return hex64(fnv1a(canon));
}

Strategy make_strategy(std::set<std::string> boolean_flags,
                       std::map<std::string, std::string> list_values) {
  Strategy s;
  s.id = strategy_id(boolean_flags, list_values);
  s.boolean_flags = std::move(boolean_flags);
  s.list_values = std::move(list_values);
  return s;
}

void validate_strategy(const Strategy& s, const ParameterSpace& space) {
  for (const auto& flag : s.boolean_flags) {
    if (!space.boolean_params.count(flag)) {
      throw Error(Errc::unknown_parameter, "boolean flag '" + flag + "'");
    }
  }
  for (const auto& [name, values] : space.list_params) {
    const auto it = s.list_values.find(name);
    if (it == s.list_values.end()) {
      throw Error(Errc::missing_key, "list parameter '" + name + "' unassigned");
    }
    if (std::find(values.begin(), values.end(), it->second) == values.end()) {
      throw Error(Errc::illegal_value, "value '" + it->second + "' for parameter '" + name + "'");
    }
  }
  for (const auto& [name, value] : s.list_values) {
    if (!space.list_params.count(name)) {
      throw Error(Errc::unknown_parameter, "list parameter '" + name + "'");
    }
  }
  if (s.id != strategy_id(s.boolean_flags, s.list_values)) {
    throw Error(Errc::bad_value, "strategy id out of sync with assignment");
  }
}

int hamming_distance(const Strategy& a, const Strategy& b) {
  int distance = 0;
  std::set<std::string> flags;
  flags.insert(a.boolean_flags.begin(), a.boolean_flags.end());
  flags.insert(b.boolean_flags.begin(), b.boolean_flags.end());
  for (const auto& flag : flags) {
    if (a.boolean_flags.count(flag) != b.boolean_flags.count(flag)) ++distance;
  }
  std::set<std::string> params;
  for (const auto& [k, v] : a.list_values) params.insert(k);
  for (const auto& [k, v] : b.list_values) params.insert(k);
  for (const auto& name : params) {
    const auto ia = a.list_values.find(name);
    const auto ib = b.list_values.find(name);
    if (ia == a.list_values.end() || ib == b.list_values.end() || ia->second != ib->second) ++distance;
  }
  return distance;
}

Strategy change_random_parameter(const Strategy& s, const ParameterSpace& space, Rng& rng) {
  // Mutable parameters in a fixed order: booleans first, then list
  // parameters with >= 2 values, both sorted by name.
  std::vector<const std::string*> booleans;
  for (const auto& flag : space.boolean_params) booleans.push_back(&flag);
  std::vector<const std::map<std::string, std::vector<std::string>>::value_type*> lists;
  for (const auto& entry : space.list_params) {
    if (entry.second.size() >= 2) lists.push_back(&entry);
  }
  const std::size_t total = booleans.size() + lists.size();
  if (total == 0) {
    throw Error(Errc::no_mutable_parameter, "no boolean flags and no multi-valued list parameters");
  }

  const std::size_t pick = uniform_index(rng, total);
  Strategy next = s;
  if (pick < booleans.size()) {
    const std::string& flag = *booleans[pick];
    if (!next.boolean_flags.erase(flag)) next.boolean_flags.insert(flag);
  } else {
    const auto& [name, values] = *lists[pick - booleans.size()];
    const std::string& current = s.list_values.at(name);
    std::vector<const std::string*> alternatives;
    for (const auto& value : values) {
      if (value != current) alternatives.push_back(&value);
    }
    next.list_values[name] = *alternatives[uniform_index(rng, alternatives.size())];
  }
  next.id = strategy_id(next.boolean_flags, next.list_values);
  return next;
}

std::vector<Strategy> create_random_strategies(const Strategy& s, int walks, int walk_length,
                                               const ParameterSpace& space, Rng& rng) {
  std::vector<Strategy> result;
  result.reserve(static_cast<std::size_t>(std::max(walks, 0)));
  for (int i = 0; i < walks; ++i) {
    Strategy candidate = s;
    for (int j = 0; j < walk_length; ++j) {
      candidate = change_random_parameter(candidate, space, rng);
    }
    result.push_back(std::move(candidate));
  }
  return result;
}

namespace {

// E-style joining: `--name=value`, or direct concatenation (`-sine13`) for
// short options. A flag already ending in '=' is concatenated as written.
void append_pair(std::vector<std::string>& argv, InvocationFormat format,
                 const std::string& name, const std::string& value) {
  if (!name.empty() && name.back() == '=') {
    argv.push_back(name + value);
    return;
  }
  switch (format) {
    case InvocationFormat::EStyle:
      if (name.rfind("--", 0) == 0) {
        argv.push_back(name + "=" + value);
      } else {
        argv.push_back(name + value);
      }
      break;
    case InvocationFormat::LeoStyle:
    case InvocationFormat::SatallaxStyle:
      argv.push_back(name);
      argv.push_back(value);
      break;
  }
}

std::string render_time_limit(double seconds) {
  const double rounded = std::ceil(seconds);
  return std::to_string(static_cast<long>(std::max(rounded, 1.0)));
}

}  // namespace

Invocation format_invocation(const Strategy& s, const SolverSpec& spec,
                             const std::string& problem, double time_limit,
                             const std::string& tmp_dir) {
  Invocation inv;
  inv.argv.push_back(spec.binary_path);

  switch (spec.format) {
    case InvocationFormat::EStyle:
      for (const auto& flag : s.boolean_flags) inv.argv.push_back(flag);
      for (const auto& [name, value] : s.list_values) {
        append_pair(inv.argv, spec.format, name, value);
      }
      break;
    case InvocationFormat::LeoStyle:
      for (const auto& flag : s.boolean_flags) inv.argv.push_back(flag);
      for (const auto& [name, value] : s.list_values) {
        inv.argv.push_back(name);
        inv.argv.push_back(value);
      }
      break;
    case InvocationFormat::SatallaxStyle: {
      std::string contents;
      for (const auto& flag : s.boolean_flags) contents += flag + " = true\n";
      for (const auto& [name, value] : s.list_values) contents += name + " = " + value + "\n";
      const std::string path =
          tmp_dir + "/mode_" + s.id + "_" + hex64(fnv1a(problem)) + ".cfg";
      inv.argv.push_back("-m");
      inv.argv.push_back(path);
      inv.aux_file = {path, contents};
      break;
    }
  }

  for (const auto& arg : spec.default_args) inv.argv.push_back(arg);
  if (!spec.time_flag.empty()) {
    append_pair(inv.argv, spec.format, spec.time_flag, render_time_limit(time_limit));
  }
  if (spec.problem_flag.empty()) {
    inv.argv.push_back(problem);
  } else {
    append_pair(inv.argv, spec.format, spec.problem_flag, problem);
  }
  return inv;
}

}  // namespace stratkit
