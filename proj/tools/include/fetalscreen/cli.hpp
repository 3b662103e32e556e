#pragma once

// Batch command-line driver. `run` is what the executable calls; tests call it
// in-process.

#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "fetalscreen/error.hpp"

namespace fetalscreen::cli {

enum ExitCode : int {
  kOk = 0,
  kBadArguments = 2,
  kIoFailure = 3,
  kValidationFailure = 4,
};

/// INVALID_ARGUMENT -> 2, IO_FAILURE and MALFORMED_FILE -> 3, everything else -> 4.
int exit_code_for(ErrorCode code);

std::string_view version();

/// `args` excludes the program name. Machine-readable output goes to `out`,
/// diagnostics to `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace fetalscreen::cli
