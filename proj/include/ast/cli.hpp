#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ast::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

/// Runs `astskin` with `args` (program name excluded). Audio read from "-" comes from `in`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace ast::cli
