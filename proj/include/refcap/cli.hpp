#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace refcap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

/// Runs one `refcap` invocation. args excludes the program name. Results and
/// line-JSON logs go to out, diagnostics to err. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace refcap::cli
