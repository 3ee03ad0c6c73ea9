#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sibucket::cli {

/// Parses `args` (without the program name), runs one subcommand and returns
/// the process exit code. Progress goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sibucket::cli
