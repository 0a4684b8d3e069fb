#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdq::cli {

// Runs the sdq command line with `args` (excluding the program name).
// Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdq::cli
