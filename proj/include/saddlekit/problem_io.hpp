#pragma once

#include "saddlekit/kv_format.hpp"
#include "saddlekit/problem.hpp"

#include <string>
#include <string_view>

namespace saddlekit {

inline constexpr const char* kProblemHeader = "saddlekit-problem v1";

/// Text form of a problem; see docs/problem-format.md.
std::string format_problem(const ProblemSpec& p);

/// Throws ParseError (with line and column) on malformed text or
/// inconsistent dimensions, and ValidationError for non-PSD matrices.
ProblemSpec parse_problem(std::string_view text);

ProblemSpec load_problem(const std::string& path);
void save_problem(const ProblemSpec& p, const std::string& path);

}  // namespace saddlekit
