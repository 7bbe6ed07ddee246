#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace filament::cli {

// Runs one subcommand. `args` excludes the program name. Returns the process
// exit status: 0 on success, 1 when selfcheck finds a failing invariant,
// 2 on any usage, validation or I/O error (diagnostic on `err`).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace filament::cli
