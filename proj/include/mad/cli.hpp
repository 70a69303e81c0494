#pragma once

namespace mad {

/// Entry point of the `mad` tool. Returns the process exit code:
/// 0 success, 2 validation failure, 3 numerical failure, 4 bad input.
/// Errors are reported on stderr as {"code", "message", "context"}.
int run_cli(int argc, char** argv);

}  // namespace mad
