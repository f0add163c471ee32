#pragma once

namespace dca {

/// Entry point behind the `dca` executable. Returns the process exit code:
/// 0 on success, 1 for configuration, input, validation or numeric failures
/// (including a failed gradcheck), 2 for internal invariant violations.
int run_cli(int argc, const char* const* argv);

}  // namespace dca
