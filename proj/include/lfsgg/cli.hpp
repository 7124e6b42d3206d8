#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lfsgg::cli {

// Entry point behind the lfsgg binary, separated from main() so tests can
// drive it in-process. args excludes the program name. Exit codes: 0
// success, 1 unexpected failure, 2 usage or input parse errors (including
// unknown image ids), 3 vocabulary errors, 4 matcher resource limits.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace lfsgg::cli
