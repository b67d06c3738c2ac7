#pragma once

#include <string>
#include <vector>

namespace cloudfill::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kUsage = 2, kSolverFailure = 3 };

/// Runs the command line (args[0] is the program name) and returns the exit
/// code. Diagnostics go to standard error.
int run(const std::vector<std::string>& args);

}  // namespace cloudfill::cli
