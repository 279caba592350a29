#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace peerrisk::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kProviderError = 3,
};

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace peerrisk::cli
