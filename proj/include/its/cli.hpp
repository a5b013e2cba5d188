#pragma once

#include <iosfwd>

#include "its/error.hpp"

namespace its::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kProvider = 2,
  kValidationFailed = 3,
  kIo = 4,
};

int exit_code_for(ErrorKind kind) noexcept;

/// Entry point behind the its-meter binary.
/// Subcommands: run, simulate, validate, reduce-posthoc, report.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace its::cli
