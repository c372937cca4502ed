#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nic::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kFormat = 3,
  kNumeric = 4,
};

// Runs one `nic` invocation. args[0] is the program name. Normal output goes
// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nic::cli
