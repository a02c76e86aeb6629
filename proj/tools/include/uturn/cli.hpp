#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace uturn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // some or all inputs failed
inline constexpr int kExitUsage = 2;    // bad flags or configuration

/// Runs `uturn <subcommand> ...`; `args` excludes the program name.
/// Never throws; errors are reported on `err` and mapped to exit codes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string_view version();

}  // namespace uturn::cli
