// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace walkstack::tools {

/// Exit codes of the walkstack command.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // I/O and unexpected errors
  kExitUsage = 2,    // bad arguments or configuration
  kExitRun = 3,      // a layer failed during a run
  kExitViolations = 4,
};

/// Directory searched for configuration names: $WALKSTACK_CONFIG_DIR, else
/// the shipped configs directory.
std::string default_config_dir();

/// A path as given, else `name` or `name.json` inside the config directory.
std::string resolve_config(const std::string& name);

/// Entry point of the walkstack command; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace walkstack::tools
