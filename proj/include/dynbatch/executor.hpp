// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dynbatch/modules.hpp"
#include "dynbatch/schedule.hpp"
#include "dynbatch/tensor.hpp"

namespace dynbatch {

// Single-assignment store of per-node feature rows. A value exists only
// after its node's call group executed; writing a slot twice throws.
class ValueStore {
 public:
  ValueStore(std::span<const Program> batch, std::int64_t width);

  std::int64_t width() const { return width_; }
  bool has(NodeRef ref) const;
  std::span<const double> row(NodeRef ref) const;  // throws missing_operand
  void set(NodeRef ref, std::span<const double> value);

 private:
  void check_ref(NodeRef ref) const;

  std::int64_t width_;
  std::vector<std::vector<double>> values_;  // per example, node-major
  std::vector<std::vector<char>> present_;
};

struct ExecutionTrace {
  std::int64_t expensive_calls = 0;
  std::vector<std::int64_t> per_function_calls;  // indexed by function id
  std::vector<double> per_step_seconds;
  // Module-apply wall time and gather/scatter (stacking) wall time are
  // accounted separately.
  double module_seconds = 0.0;
  double stacking_seconds = 0.0;
  double total_seconds = 0.0;
  std::int64_t peak_group_rows = 0;
};

struct ExecResult {
  TensorBatch outputs;  // one root value row per example
  ExecutionTrace trace;
};

// Stacks rows in ref order. Throws missing_operand if any ref is absent.
TensorBatch gather_rows(const ValueStore& store, std::span<const NodeRef> refs);

// Writes row i of values to refs[i]. Throws row_count_mismatch.
void scatter_rows(ValueStore& store, std::span<const NodeRef> refs, const TensorBatch& values);

// Runs a schedule: per call group, gather member operand rows, apply the
// module once, scatter results. The schedule is expected to pass
// verify_schedule; dependency bugs surface as missing_operand.
ExecResult execute(const Schedule& schedule, std::span<const Program> batch,
                   const TensorBatch& inputs, const ModuleSet& modules);

// Convenience overload building the module set from (vocab, seed).
ExecResult execute(const Schedule& schedule, std::span<const Program> batch,
                   const TensorBatch& inputs, const FunctionVocab& vocab, std::uint64_t seed);

}  // namespace dynbatch
