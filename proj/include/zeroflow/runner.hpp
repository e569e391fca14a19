#pragma once

#include <iosfwd>

#include "zeroflow/config.hpp"

namespace zeroflow {

enum ExitCode : int { exit_ok = 0, exit_violation = 1, exit_config = 2 };

/// Runs one experiment, writes its artifacts and manifest.json into
/// config.output, and logs progress to `log`. Returns 0 on success, 1 on an
/// invariant violation or numerical failure, 2 on a configuration error.
int run(const ExperimentConfig& config, std::ostream& log);

}  // namespace zeroflow
