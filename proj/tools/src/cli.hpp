#pragma once

#include <iosfwd>

namespace svaro::cli {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kSchema = 3,
  kIo = 4,
  kNumerical = 5,
  kInvalidArgument = 6,
};

/// Parses argv and runs one subcommand. Errors are reported on `err` as a
/// single line: error: kind=<kind> msg=<message>
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace svaro::cli
