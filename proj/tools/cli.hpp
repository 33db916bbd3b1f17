#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace doccheck::cli {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2 };

// Runs one subcommand. `args` excludes the program name. Results go to
// `out` (unless --out names a file); diagnostics and the single-line JSON
// error record go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace doccheck::cli
