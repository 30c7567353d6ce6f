#pragma once

#include <iosfwd>

namespace hypirb::harness {

/// Entry point of the command-line tool. Returns 0 on success, 2 on usage or
/// configuration errors and 1 on runtime failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hypirb::harness
