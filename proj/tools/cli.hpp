#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace krono::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 2,
  exit_data = 3,
  exit_numerical = 4,
  exit_interrupted = 130,
};

// Runs one invocation. `args` excludes the program name. Setting *cancel (for
// example from a SIGINT handler) stops long runs after flushing partial results.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* cancel = nullptr);

}  // namespace krono::cli
