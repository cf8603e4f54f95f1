#pragma once

// Command-line front end. `run` is the whole program minus process plumbing,
// so tests can drive it with in-memory streams.

#include <iosfwd>
#include <string>
#include <vector>

namespace dccm::cli {

enum ExitCode : int { kOk = 0, kDataError = 1, kArgumentError = 2 };

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dccm::cli
