#pragma once

#include <iosfwd>

namespace linshap::cli {

// Exit codes: 0 success, 1 usage, 2 data, 3 numerical.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

// Subcommands: fit, estimate-dist, transforms, explain, experiment, report.
// Data goes to `out` (or files); diagnostics go to `err`.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, const char* const* argv);

}  // namespace linshap::cli
