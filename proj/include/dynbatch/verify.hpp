// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace dynbatch {

struct VerifyOptions {
  int seeds = 100;
  std::int64_t b = 8;
  int p = 12;
  int length = 12;
  int width = 8;
  std::uint64_t base_seed = 0;
  bool parallel = false;  // split seeds across threads; checks only, no timing
};

struct VerifyReport {
  int cases_run = 0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

// Runs the invariant suite over seeded random batches: schedule completeness
// and dependency order for all four strategies, call-count bounds, step-count
// identities, output equivalence against the naive path, prefix round-trip,
// single-assignment, and determinism. Failure messages name the seed for
// replay.
VerifyReport run_property_suite(const VerifyOptions& options,
                                const std::function<void(const std::string&)>& log = {});

}  // namespace dynbatch
