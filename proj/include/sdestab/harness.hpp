#pragma once

#include <string>
#include <vector>

namespace sdestab {

// Exit codes of the command-line harness.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCondition = 3;
inline constexpr int kExitRuntime = 4;

// Full CLI entry point (subcommand dispatch, config parsing, artifact
// writing). Exposed so tests can drive it in-process.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

const char* version();

}  // namespace sdestab
