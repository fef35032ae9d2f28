#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mcuq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitBackend = 2;
inline constexpr int kExitDegenerate = 3;

// Parses and runs one invocation (args exclude the program name). Every
// flag is checked before any file or network access.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcuq::cli
