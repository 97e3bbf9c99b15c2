#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hbtm::cli {

/// Runs one command line (args[0] is the program name).  Returns the process
/// exit code; failures print {"error": kind, "message": ...} on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hbtm::cli
