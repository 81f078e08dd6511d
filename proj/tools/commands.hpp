#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace posefit::cli {

/// Exit codes: 0 success, 1 parse or I/O failure, 2 usage or invalid configuration.
enum ExitCode : int { kOk = 0, kIoError = 1, kUsage = 2 };

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace posefit::cli
