#include <exception>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "agepop/commands.hpp"
#include "agepop/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Control and turnpike experiments for an age-structured population model"};
  app.fallthrough();
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::string seed;
  std::string modes;
  std::string horizon;
  app.add_option("--config", config_path, "scenario file (key = value lines)");
  app.add_option("--out", out_dir, "output directory (overrides output.directory)");
  app.add_option("--seed", seed, "seed recorded as run.seed");
  app.add_option("--modes", modes, "number of spatial modes (overrides discretization.K)");
  app.add_option("--horizon", horizon, "time horizon T (overrides discretization.T)");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "uncontrolled transport; trajectory, renewal trace and summary"},
      {"nullcontrol", "synthesize and verify a null control"},
      {"lq", "static and dynamic LQ optima with the turnpike report"},
      {"sweep", "repeat lq or the epsilon study over sweep.values"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : agepop::kExitPrecondition;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  agepop::ScenarioConfig config;
  try {
    if (!config_path.empty()) config = agepop::load_config(config_path);
    const std::vector<std::pair<std::string, const std::string*>> overrides = {
        {"output.directory", &out_dir},
        {"run.seed", &seed},
        {"discretization.K", &modes},
        {"discretization.T", &horizon},
    };
    for (const auto& [key, value] : overrides) {
      if (!value->empty()) agepop::set_config_value(config, key, *value);
    }
    agepop::validate_config(config);
  } catch (const std::exception& e) {
    std::cerr << "agepop: " << e.what() << '\n';
    return agepop::exit_code_for(e);
  }
  return agepop::run_command(command, config, std::cout, std::cerr);
}
