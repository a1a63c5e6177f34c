#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace glbandit {

/// Entry point of the `glbandit` tool: simulate, verify, sweep, presets. Returns the process exit code.
int run_command(int argc, const char* const* argv);

/// Same, with arguments (excluding the program name) and explicit streams.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace glbandit
