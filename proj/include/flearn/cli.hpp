#pragma once

namespace flearn {

// Process exit codes: 0 = success, 1 = usage error, 2 = numeric failure
// (training divergence, gradient check above tolerance), 3 = I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumeric = 2;
inline constexpr int kExitIo = 3;

/// Parses and runs one invocation; returns the process exit code. All
/// diagnostics go to stderr, reports and tables to stdout.
int run_cli(int argc, const char* const* argv);

}  // namespace flearn
