#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pqcodec::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitIo = 3,
  kExitNumeric = 4,
};

/// Runs the command line `args` (program name excluded). Machine-readable
/// output goes to `out`, logs and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pqcodec::cli
