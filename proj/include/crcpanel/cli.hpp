#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crcpanel {

// Exit codes: 0 success, 2 usage / validation / parse errors, 3 numerical
// failures. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crcpanel
