#pragma once

#include <string>
#include <vector>

namespace ahm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitCheck = 3;

// argv without the program name; returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace ahm::cli
