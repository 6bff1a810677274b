#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trafficpm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one invocation. `args` excludes the program name. Progress goes to
/// `log` as one JSON object per line; usage text goes to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);

}  // namespace trafficpm::cli
