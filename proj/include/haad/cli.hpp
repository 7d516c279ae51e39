#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace haad::cli {

enum ExitCode : int { kOk = 0, kCheckFailure = 1, kUsage = 2, kIo = 3 };

/// Runs the command line `args` (args[0] is the program name). Reports go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace haad::cli
