#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rclevr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;  // bad spec, data, or configuration
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace rclevr::cli
