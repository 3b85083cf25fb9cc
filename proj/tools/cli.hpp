#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vsr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitInvalid = 2;

/// Runs the command line (without the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vsr::cli
