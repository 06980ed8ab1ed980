#pragma once

// The flrpoi command line: fit, simulate and kappa subcommands.

#include <ostream>
#include <string>
#include <vector>

namespace flrpoi::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kEstimationError = 3 };

// Parses argv and runs the subcommand. Results go to --out or `out`;
// messages go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
// Same, with the arguments after the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flrpoi::cli
