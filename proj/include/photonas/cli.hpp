#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace photonas {

/// Runs one CLI invocation. `args` excludes the program name. Results go to `out` as
/// key=value lines, diagnostics to `err`; returns the process exit code.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace photonas
