#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fluxwarn::cli {

/// Parses `args` (without the program name) and runs one subcommand.
/// Returns 0 on success, 1 on a runtime failure, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fluxwarn::cli
