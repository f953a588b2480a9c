#pragma once

#include <string>
#include <vector>

namespace sbx {

inline constexpr const char* kVersion = "0.1.0";

/// Entry point behind the `sbx` binary. `args` excludes the program name.
/// Returns a process exit status; 0 on success, nonzero with a diagnostic on
/// stderr (codes documented in --help).
int run_command(const std::vector<std::string>& args);

}  // namespace sbx
