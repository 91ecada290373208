// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace peprank {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point of the peprank executable. Reports go to files named by
/// flags (or `out` where a flag allows "-"); diagnostics and the resolved
/// configuration go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace peprank
