#pragma once

#include <ostream>

namespace mfcm::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInputError = 2,
  kNumericError = 3,
  kConfigError = 4,
};

// Entry point of the `mfcm` tool. Machine-readable results go to `out`,
// diagnostics and progress to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mfcm::cli
