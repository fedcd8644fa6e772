#pragma once

namespace hystdyn::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNumericalError = 3,
};

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv);

}  // namespace hystdyn::cli
