#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace simaudit::cli {

/// Exit statuses:
///   0 success, 1 findings with --fail-on-findings, 2 I/O or corrupt archive,
///   3 malformed input or index, 4 provider failure, 64 bad usage,
///   70 internal error.
inline constexpr int kExitFindings = 1;
inline constexpr int kExitInternal = 70;

/// Runs `simaudit <args...>`; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace simaudit::cli
