#pragma once

#include <iosfwd>

#include "lot/error.hpp"

namespace lot::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kIo = 1,           ///< unreadable/unwritable or malformed file
  kDegenerate = 2,   ///< rank-deficient or zero kernel
  kDivergence = 3,   ///< Newton divergence or non-finite values
  kShape = 4,        ///< shape mismatch between files, flags or model
  kCheckFailed = 5,  ///< a verification assertion did not hold
  kNumerical = 6,    ///< any other library error
  kUsage = 64,       ///< bad command line
};

int exit_code_for(ErrorKind kind) noexcept;

/// Entry point of the `lotkit` tool. Errors are reported on `err` as a single
/// line "error<TAB>Kind<TAB>message".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lot::cli
