#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace stratkit {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitRuntimeError = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitUnsolved = 7;  // ran fine, problem not solved

struct CliOverrides {
  std::optional<std::uint64_t> seed;  // replaces the configured rng seed
  bool force = false;                 // proceed on model-store fingerprint mismatch
};

// Searches for per-problem best strategies and writes the run store, the
// registry of evaluated strategies, and the file of preselected strategies.
int cmd_find_strategies(const std::string& config_path, const CliOverrides& overrides = {});

// Fits the runtime predictors from the search results and writes the model
// store.
int cmd_learn(const std::string& config_path, const CliOverrides& overrides = {});

// Schedules strategies on one problem within a time budget. Prints
// `SOLVED <problem> <strategy> <time>` or `UNSOLVED <problem> <time>`.
int cmd_run(const std::string& config_path, const std::string& problem, double budget,
            const CliOverrides& overrides = {});

}  // namespace stratkit
