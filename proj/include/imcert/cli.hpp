#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace imcert::cli {

enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kNotWellPosed = 2,
  kNonConvergent = 3,
};

// Runs the command line `args` (without the program name). Reports go to
// `out`, diagnostics to `err`.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

// Worker count from IMCERT_WORKERS, default 1.
unsigned default_workers();

}  // namespace imcert::cli
