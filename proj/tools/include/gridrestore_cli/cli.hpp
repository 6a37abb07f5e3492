#pragma once

#include <iosfwd>

namespace gridrestore {

/// Entry point of the `gridrestore` tool. Returns the process exit status;
/// diagnostics go to `err`, the run summary to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gridrestore
