#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace saddlekit {

inline constexpr int kExitConverged = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitIterationLimit = 2;

/// Entry point of the saddlekit tool. `args` excludes the program name.
/// Returns 0 on success or convergence, 2 when a solve hit its iteration
/// limit and 1 on any error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace saddlekit
