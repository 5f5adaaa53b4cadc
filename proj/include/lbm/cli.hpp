#pragma once

namespace lbm {

/// Entry point behind the `lbm` binary, callable in-process from tests.
/// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
int cli_main(int argc, const char* const* argv);

}  // namespace lbm
