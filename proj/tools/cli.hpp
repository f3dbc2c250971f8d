#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coresel::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInvalidFlags = 2,
  kInvalidInput = 3,
  kRuntimeError = 4,
};

/// Runs the command line `args` (without the program name). Normal output
/// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coresel::cli
