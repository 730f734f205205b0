#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace oba {

/// Runs one `oba` subcommand. `args` excludes the program name. Returns 0
/// on success, 1 on validation errors and 2 on usage, I/O or format
/// errors.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Set to request a running `serve` to shut down.
extern std::atomic<bool> g_stop_requested;

}  // namespace oba
