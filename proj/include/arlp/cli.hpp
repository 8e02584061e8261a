#pragma once

#include <string>
#include <vector>

// Command line front end. run() is the whole program so tests can drive the
// tool in-process.
//
// Exit codes: 0 success, 1 usage errors, 2 bad configuration or data,
// 3 numeric failures (divergence, failed gradient check, degenerate metrics).

namespace arlp::cli {

int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args without the program name

}  // namespace arlp::cli
