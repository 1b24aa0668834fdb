// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dynbatch/program.hpp"

namespace dynbatch {

// Addresses one node of one example in a batch.
struct NodeRef {
  std::int32_t example = 0;
  std::int32_t node = 0;

  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

// Node instances executed together in one batched module call. One expensive
// call if the function's cost class is expensive, regardless of member count.
struct CallGroup {
  int function_id = 0;
  std::vector<NodeRef> members;

  friend bool operator==(const CallGroup&, const CallGroup&) = default;
};

using Step = std::vector<CallGroup>;

enum class Strategy { naive, standard, improved, online };

// Applicability: standard and improved need the whole batch of graphs up
// front; improved also pays off most when graphs are balanced (steps shrink
// from s to d+1, logarithmic for balanced trees). online only ever sees the
// currently ready frontier, so it covers architectures not known a priori at
// the same O(p*d) call bound. Cyclic graphs are rejected by validation;
// callers unroll them into a DAG first, which bounds d by the unrolled
// length.
const char* strategy_name(Strategy strategy);
Strategy strategy_from_name(const std::string& name);

// Steps execute strictly in order; groups within a step are mutually
// independent.
struct Schedule {
  Strategy strategy = Strategy::naive;
  std::vector<Step> steps;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct BatchStats {
  std::int64_t b = 0;
  std::int64_t p = 0;
  std::int64_t s_max = 0;
  std::int64_t d_max = 0;
};

struct FrontierItem {
  NodeRef ref;
  int function_id = 0;
};

enum class ScheduleViolationKind {
  invalid_ref,
  function_mismatch,
  empty_group,
  duplicate_execution,
  missing_execution,
  dependency_order_violation,
};

const char* schedule_violation_name(ScheduleViolationKind kind);

struct ScheduleViolation {
  ScheduleViolationKind kind;
  std::string detail;
};

struct ScheduleReport {
  std::vector<ScheduleViolation> violations;

  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

BatchStats compute_batch_stats(std::span<const Program> batch, const FunctionVocab& vocab);

// One singleton call per node, example by example in dependents-first order.
// Every node is its own step, so the call count is the expensive-node census.
Schedule schedule_naive(std::span<const Program> batch, const FunctionVocab& vocab);

// Flattens each program dependents-first and executes the resulting b x s
// grid column by column, grouping each column by function id. Exactly s_max
// steps; at most min(p, b) expensive calls per step.
Schedule schedule_standard(std::span<const Program> batch, const FunctionVocab& vocab);

// Pools nodes across the whole batch by max distance from root and executes
// pools deepest first, grouping by function id. Exactly d_max + 1 steps; at
// most p expensive calls per step.
Schedule schedule_improved(std::span<const Program> batch, const FunctionVocab& vocab);

// Groups items by function id; group order is ascending function id, members
// sorted by (example, node).
Step group_by_function(std::span<const FrontierItem> items);

// One step of frontier batching for architectures not known ahead of time.
// Throws dependency_violation if a frontier node has an unexecuted child.
Step schedule_online(std::span<const Program> batch, std::span<const NodeRef> frontier,
                     const std::function<bool(NodeRef)>& already_executed,
                     const FunctionVocab& vocab);

// Drives schedule_online with the maximal ready frontier until no nodes
// remain.
Schedule schedule_online_full(std::span<const Program> batch, const FunctionVocab& vocab);

Schedule build_schedule(Strategy strategy, std::span<const Program> batch,
                        const FunctionVocab& vocab);

// Exhaustive completeness and dependency-order check; violations are data.
ScheduleReport verify_schedule(const Schedule& schedule, std::span<const Program> batch);

std::int64_t count_expensive_calls(const Schedule& schedule, const FunctionVocab& vocab);

// Full-traversal census of expensive nodes; the exact naive call count.
std::int64_t count_expensive_nodes(std::span<const Program> batch, const FunctionVocab& vocab);

std::int64_t count_total_nodes(std::span<const Program> batch);

}  // namespace dynbatch
