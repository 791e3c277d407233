#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eptime::cli {

enum ExitCode : int {
    exit_pass = 0,
    exit_check_failure = 1,
    exit_usage = 2,
    exit_numerical = 3,
};

/// Runs the command line `args` (without the program name). Summaries go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// Directory holding the bundled *.conf scenarios.
std::string bundled_scenario_dir();

} // namespace eptime::cli
