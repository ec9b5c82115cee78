#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stratkit/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"strategy search, runtime prediction and scheduling for automated solvers"};
  app.require_subcommand(1);

  std::string config = "setup.ini";
  std::optional<std::uint64_t> seed;
  std::string problem;
  double budget = 0.0;
  bool force = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config, "Path to the settings file")
        ->capture_default_str();
    cmd->add_option("--seed", seed, "Override the configured random seed");
  };

  CLI::App* find = app.add_subcommand(
      "find-strategies", "Search for per-problem best strategies on the training set");
  add_common(find);

  CLI::App* learn =
      app.add_subcommand("learn", "Fit runtime predictors from the search results");
  add_common(learn);

  CLI::App* run = app.add_subcommand("run", "Solve one problem within a time budget");
  add_common(run);
  run->add_option("-p,--problem", problem, "Problem file to solve")->required();
  run->add_option("-t,--time", budget, "Time budget in seconds")->required();
  run->add_flag("--force", force, "Proceed even if the model store was trained under different settings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return stratkit::kExitConfigError;
  }

  stratkit::CliOverrides overrides;
  overrides.seed = seed;
  overrides.force = force;

  if (find->parsed()) return stratkit::cmd_find_strategies(config, overrides);
  if (learn->parsed()) return stratkit::cmd_learn(config, overrides);
  return stratkit::cmd_run(config, problem, budget, overrides);
}
