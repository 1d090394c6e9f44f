#pragma once

namespace igpr {

/// Command-line entry point (subcommands: simulate, fit, predict, eval,
/// cov-report). Returns 0 on success, 1 on usage errors, 2 on data errors,
/// 3 on numerical failures.
int cli_main(int argc, const char* const* argv);

}  // namespace igpr
