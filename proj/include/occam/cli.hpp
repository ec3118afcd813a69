#pragma once

#include <string>
#include <vector>

namespace occam::cli {

// Parses and runs one subcommand; returns the process exit code.
int run(int argc, const char* const* argv);
// Same, with the arguments after the program name.
int run(const std::vector<std::string>& args);

}  // namespace occam::cli
