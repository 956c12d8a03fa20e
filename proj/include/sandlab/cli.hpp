#pragma once

#include <ostream>
#include <span>
#include <string>

namespace sandlab::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitUsage = 1;
/// Reserved for runs whose stated tolerances are violated.
inline constexpr int kExitFail = 2;

/// Runs one subcommand. `args` excludes the program name. Human-readable
/// results go to `out`, diagnostics to `err`; the JSON report (and CSV files
/// when requested) go to the output directory.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace sandlab::cli
