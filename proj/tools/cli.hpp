#pragma once

// Command-line front end. Kept separate from main() so tests can drive it
// in-process with captured streams.

#include <iosfwd>

namespace actipipe::cli {

/// Exit codes: 0 success, 1 data or I/O error, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace actipipe::cli
