#pragma once

#include <ostream>

namespace posechain {

inline constexpr const char* kVersion = "0.1.0";

/// Entry point of the `posechain` tool. Returns the process exit code:
/// 0 on success, 1 for a library error, CLI11's code for usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace posechain
