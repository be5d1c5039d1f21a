#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctfvault::cli {

enum ExitCode : int {
  kSuccess = 0,
  kValidationErrors = 1,
  kUsage = 2,
  kRuntimeFailure = 3,
};

/// Runs `ctf-vault <validate|build|flagcheck-gen|stats|serve> [flags]`.
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace ctfvault::cli
