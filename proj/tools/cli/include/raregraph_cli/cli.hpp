#pragma once

#include <string>
#include <vector>

namespace raregraph::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand. `args` excludes the program name.
int run(std::vector<std::string> args);

}  // namespace raregraph::cli
