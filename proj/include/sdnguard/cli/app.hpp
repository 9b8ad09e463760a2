#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdnguard::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// Parses `sdnguard <command> --config <file> [overrides]` and runs it.
/// args[0] is the program name. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdnguard::cli
