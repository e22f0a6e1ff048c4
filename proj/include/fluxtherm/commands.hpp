#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fluxtherm/config.hpp"
#include "fluxtherm/serialization.hpp"

namespace fluxtherm {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;
inline constexpr int config_error = 2;
inline constexpr int no_convergence = 3;
}  // namespace exit_code

struct CommandOutcome {
  int exit_code = exit_code::ok;
  Json summary;
  std::vector<std::filesystem::path> files;
};

CommandOutcome cmd_sg(const ScenarioConfig& cfg);
CommandOutcome cmd_nv_pulses(const ScenarioConfig& cfg);
CommandOutcome cmd_field_sweep(const ScenarioConfig& cfg);
CommandOutcome cmd_solve_eta(const ScenarioConfig& cfg);
CommandOutcome cmd_verify(const ScenarioConfig& cfg);

const std::vector<std::string>& command_names();

/// Runs a command by name. Errors are reported on `err` and mapped to exit
/// codes: 2 for configuration errors, 3 for non-convergence.
int run_command(const std::string& name, const ScenarioConfig& cfg,
                std::ostream& out, std::ostream& err);

}  // namespace fluxtherm
