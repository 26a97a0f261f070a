#pragma once

#include <string>
#include <vector>

namespace ergolab {

enum ExitCode : int {
    kExitPass = 0,
    kExitConfig = 2,
    kExitConvergence = 3,
    kExitAnalysis = 4,
    kExitVerification = 5,
};

/// Runs the ergolab command line. Returns the process exit code; errors are
/// reported on stderr prefixed with the failing stage.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace ergolab
