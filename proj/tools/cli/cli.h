#ifndef CODEIL_TOOLS_CLI_CLI_H_
#define CODEIL_TOOLS_CLI_CLI_H_

#include <ostream>

namespace codeil::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

// Parses and runs one command line. Returns the process exit code.
int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace codeil::cli

#endif  // CODEIL_TOOLS_CLI_CLI_H_
