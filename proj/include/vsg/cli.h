#ifndef VSG_CLI_H_
#define VSG_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace vsg {

// Exit codes of the command-line tool.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// `args` excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vsg

#endif  // VSG_CLI_H_
