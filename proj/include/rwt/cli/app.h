#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rwt::cli {

// Process exit codes of the rwt tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,      // unexpected failure, gradient check above tolerance
  kExitUsage = 2,        // bad flags, bad config file or value
  kExitMissingFile = 3,  // an input file does not exist
  kExitFormat = 4,       // bad magic, version, checksum, truncation
  kExitDiverged = 5,     // non-finite gradient or diverging loss
};

// Runs `rwt <args...>` (args exclude the program name). Results go to `out`,
// diagnostics to `err` and the log.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Applies RWT_LOG_LEVEL (trace, debug, info, warn, error, critical, off) to
// the default logger. Defaults to info.
void ConfigureLogging();

}  // namespace rwt::cli
