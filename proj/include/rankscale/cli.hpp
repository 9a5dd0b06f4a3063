#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "rankscale/error.hpp"

namespace rankscale {

/// Process exit codes shared by every subcommand.
enum class ExitCode : int {
  success = 0,
  usage = 1,
  io_or_parse = 2,
  degenerate_numerics = 3,
  invalid_data = 4,
  unreachable_target = 5,
};

ExitCode exit_code_for(ErrorKind kind);

/// Runs the command line `args` (without the program name). JSON reports go to
/// `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rankscale
