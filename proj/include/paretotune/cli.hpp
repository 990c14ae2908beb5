#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace paretotune {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitEvaluator = 3;
inline constexpr int kExitJournal = 4;

// Entry point of the command-line tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace paretotune
