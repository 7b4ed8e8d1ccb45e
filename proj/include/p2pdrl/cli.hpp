#ifndef P2PDRL_CLI_HPP_
#define P2PDRL_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace p2pdrl {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitRuntime = 3,
};

// Entry point behind the p2pdrl binary. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace p2pdrl

#endif  // P2PDRL_CLI_HPP_
