#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sgnet {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

// `sgnet <command> ...` without the program name.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace sgnet
