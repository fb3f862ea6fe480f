#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qdi::cli {

enum ExitCode { kOk = 0, kFailure = 1, kNotConverged = 2 };

/// Runs `qdi <args...>` (args excludes the program name). Output goes to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qdi::cli
