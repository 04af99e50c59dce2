#pragma once

// The `sp` command line: parse, learn, neural, bench and validate.

#include <ostream>
#include <string>
#include <vector>

namespace sp {

// Exit status 0 on success, 1 on domain errors (bad input files, failed
// validation), 2 on usage errors. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sp
