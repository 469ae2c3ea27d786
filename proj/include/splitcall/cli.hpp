#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace splitcall {

// Exit codes: 0 success, 1 domain error (one JSON line on `err`), 2 usage.
// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace splitcall
