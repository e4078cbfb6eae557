#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace boostdens::cli {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

/// Entry point shared by the executable and the tests.  args[0] is the
/// program name.  Output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace boostdens::cli
