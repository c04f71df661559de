#pragma once

// Subcommands of the command-line tool. Each writes its files into
// config.directory and throws on failure; run_command maps exceptions to
// exit codes.

#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "agepop/config.hpp"

namespace agepop {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPrecondition = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitIo = 4;

// Null control was synthesized but the final state misses the tolerance.
class ResidualError : public SolverError {
 public:
  using SolverError::SolverError;
};

struct CommandOutput {
  std::vector<std::filesystem::path> files;
  std::string summary;  // key = value lines, also printed by the tool
};

CommandOutput cmd_simulate(const ScenarioConfig& config);
CommandOutput cmd_nullcontrol(const ScenarioConfig& config);
CommandOutput cmd_lq(const ScenarioConfig& config);
CommandOutput cmd_sweep(const ScenarioConfig& config);

// 2 for precondition, domain, shape and config errors, 3 for solver and
// convergence failures (and anything unexpected), 4 for I/O.
int exit_code_for(const std::exception& e);

// Dispatches by name, prints the summary to `out` and errors to `err`.
int run_command(std::string_view name, const ScenarioConfig& config,
                std::ostream& out, std::ostream& err);

}  // namespace agepop
