#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace snce {

/// Entry point behind the `snce` executable. `args` excludes the program
/// name. Returns the process exit code; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace snce
