#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rgrow {

inline constexpr const char* kVersion = "0.1.0";

// Entry point of the `rgrow` tool: simulate | solve | report.
// Returns 0 on success, 2 on usage/validation errors, 1 on internal errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rgrow
