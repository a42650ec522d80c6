// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vlaprune::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Engine version recorded in manifests.
const char* engine_version();

/**
 * Runs one CLI invocation. `args` excludes the program name, e.g. {"flops", "--n-text", "45", "--ratio", "0.5"}.
 * Structured output goes to `out`, diagnostics to `err`. Returns 0 on success, 1 on usage errors and 2 on
 * data errors.
 */
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vlaprune::app
