#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cbl::cli {

/// Parses `args` (program name excluded), runs one subcommand and returns the
/// exit code: 0 ok, 1 validation error, 2 runtime error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cbl::cli
