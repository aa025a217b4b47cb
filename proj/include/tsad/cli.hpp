#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tsad::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kIo = 2,
    kEndpointExhausted = 3,
};

/// Runs one command line (without the program name). Options may also come
/// from TSAD_<OPTION> environment variables and from a key = value file given
/// by --config; flags win over the environment, which wins over the file.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tsad::cli
