#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace facereid {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Entry point of the `facereid` tool. `args` excludes the program name.
// Returns 0 on success, 1 on usage errors (bad flags, bad params, missing
// input), 2 on runtime errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace facereid
