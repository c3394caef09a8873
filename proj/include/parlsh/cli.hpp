#pragma once

#include <iostream>

namespace parlsh {

/// Entry point of the `parlsh` command-line tool. Subcommands: build, query,
/// bench, gen-synthetic, truth. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace parlsh
