#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace diffreg::cli {

/// Exit status of a registration run.
enum ExitCode : int { kConverged = 0, kInputError = 1, kNotConverged = 2 };

/// Parses flags, runs the registration, and writes the outputs into --out.
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace diffreg::cli
