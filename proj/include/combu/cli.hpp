#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace combu::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,     // bad flags, missing or malformed config
    kData = 2,      // unreadable data, domain or bound violations, failed verification
    kDiverged = 3,  // more diverged runs than --max-diverged allows
};

/// Runs the command line in-process. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace combu::cli
