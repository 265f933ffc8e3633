#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mjls::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitAnalytic = 2;  // infeasible, diverged, or no finite γ_c

// mjls-hinf <check|solve|gamma-c|sweep|simulate> --scenario <path> [options]
// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mjls::cli
