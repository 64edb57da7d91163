#pragma once

#include <ostream>

namespace batval {

inline constexpr const char* kVersion = "1.0.0";

/// Runs the `batval` command line. Returns 0 on success, 1 on validation
/// failures (bad input, failed check) and 2 on runtime failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace batval
