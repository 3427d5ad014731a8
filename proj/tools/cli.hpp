#pragma once

#include <ostream>

namespace switchstab::cli {

/// Exit codes: 0 success, 2 input error, 3 numerical-search failure,
/// 4 construction infeasible, 1 unexpected internal error.
inline constexpr int kOk = 0;
inline constexpr int kInternal = 1;
inline constexpr int kInputError = 2;
inline constexpr int kSearchFailure = 3;
inline constexpr int kConstructionFailure = 4;

/// Runs the command line; human summaries go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace switchstab::cli
