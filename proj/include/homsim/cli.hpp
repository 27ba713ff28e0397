#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace homsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitFormat = 4;

/// Run the command line `args` (without the program name). Results go to
/// `out`, diagnostics to `err`; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace homsim::cli
