#pragma once

#include <ostream>

namespace dircalc {

/// Entry point for the dircalc tool. Exit codes: 0 success, 2 validation failure, 3 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dircalc
