#ifndef DRIFTBENCH_TOOLS_CLI_HPP
#define DRIFTBENCH_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace driftbench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point behind the `driftbench` binary. `args` excludes the program
/// name. Returns the process exit code.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace driftbench::cli

#endif  // DRIFTBENCH_TOOLS_CLI_HPP
