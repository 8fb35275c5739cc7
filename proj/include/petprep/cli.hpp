#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace petprep::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/**
 * @brief Entry point of the `petprep` command line.
 *
 * @p args excludes the program name. Returns 0 on success, 1 on usage errors
 * and 2 on data errors (missing files, invalid inputs, geometry mismatch).
 */
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

int run(int argc, const char *const *argv);

} // namespace petprep::cli
