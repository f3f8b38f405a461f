#pragma once

#include <dropsurv/error.hpp>

#include <iosfwd>
#include <span>
#include <string>

namespace dropsurv {

/// 0 success, 1 usage, 2 data/validation, 3 numerical/convergence.
int exit_code(ErrorCategory category);

/// Runs one `dropsurv` invocation; `args` excludes the program name.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace dropsurv
