#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace triage {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // infeasible, invalid input, rejected action
inline constexpr int kExitUsage = 2;    // bad flags, missing files

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Sends logs to stderr at the level named by TRIAGE_LOG (default "warn").
void configure_logging();

}  // namespace triage
