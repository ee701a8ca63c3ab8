#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace proxicause::cli {

// Runs one invocation. `args` excludes the program name. Returns the exit
// status: 0 success, 2 usage or validation error, 3 degraded experiment.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace proxicause::cli
