// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "dynbatch/error.hpp"

namespace dynbatch {

enum class CostClass { expensive, free };

// One entry of the shared function vocabulary. Arity-0 functions are input
// providers: they copy the example's feature row instead of running a module,
// and must therefore be free.
struct ModuleSpec {
  int function_id = 0;
  int arity = 0;
  int in_width = 0;
  int out_width = 0;
  CostClass cost = CostClass::free;

  bool is_expensive() const { return cost == CostClass::expensive; }
};

// The ordered set of p module types all programs are composed from.
// Feature width is uniform across the vocabulary.
class FunctionVocab {
 public:
  FunctionVocab() = default;
  explicit FunctionVocab(std::vector<ModuleSpec> specs);

  int size() const { return static_cast<int>(specs_.size()); }
  int width() const { return width_; }
  bool contains(int function_id) const {
    return function_id >= 0 && function_id < size();
  }
  const ModuleSpec& spec(int function_id) const;
  const std::vector<ModuleSpec>& specs() const { return specs_; }

 private:
  std::vector<ModuleSpec> specs_;
  int width_ = 0;
};

struct ProgramNode {
  int function_id = 0;
  std::vector<int> children;  // node ids, operand order

  friend bool operator==(const ProgramNode&, const ProgramNode&) = default;
};

// One example's module graph. Node ids are indices into `nodes`; programs
// built from prefix sequences are trees, but shared children (a node with
// several parents) are allowed when constructed directly.
struct Program {
  std::vector<ProgramNode> nodes;
  int root = 0;

  int size() const { return static_cast<int>(nodes.size()); }
};

// labels[v] = length in edges of the longest root-to-v path.
struct DepthLabels {
  std::vector<int> labels;
  int max_label = 0;
};

enum class ViolationKind {
  bad_root,
  unknown_function,
  bad_child_ref,
  arity_mismatch,
  cycle_detected,
  unreachable_node,
  free_cost_required,
};

struct Violation {
  ViolationKind kind;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

const char* violation_name(ViolationKind kind);

// Consumes `functions` in root-first prefix order: each node of arity a owns
// the next a subtrees. Throws underfull_sequence / overfull_sequence /
// unknown_function.
Program build_program_from_prefix(std::span<const int> functions,
                                  const FunctionVocab& vocab);

// Checks every Program invariant; violations are returned, not thrown.
ValidationReport validate(const Program& program, const FunctionVocab& vocab);

// Longest-path labels over the DAG; a node with several parents takes the
// maximum. Throws invalid_program if the program does not validate
// structurally (vocabulary costs are not consulted).
DepthLabels max_root_distance_labels(const Program& program);

// Every node exactly once, each after all of its children; children visited
// in stored order, so the result is deterministic.
std::vector<int> postorder_flatten(const Program& program);

// Root-first emission of function ids; inverse of build_program_from_prefix
// for tree programs.
std::vector<int> prefix_function_sequence(const Program& program);

}  // namespace dynbatch
