#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ebmkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitMetric = 3;

/// Runs the command line `args` (without the program name). Artifacts go to
/// files; `out` gets requested listings (tables, explanations) and `err` gets
/// logs and diagnostics.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Writes `content` to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace ebmkit::cli
