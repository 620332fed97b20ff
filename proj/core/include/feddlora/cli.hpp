#pragma once

namespace feddlora {

// Subcommands: simulate, schedule, gap, bound.
// Exit codes: 0 success, 1 validation/usage error, 2 runtime error.
int cli_main(int argc, const char* const* argv);

}  // namespace feddlora
