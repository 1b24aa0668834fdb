// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dynbatch/program.hpp"
#include "dynbatch/tensor.hpp"

namespace dynbatch {

// Dense weights for one function: out = relu(W * concat(operands) + bias).
// W is stored input-major, weights[i * width + j] for concatenated operand
// element i and output j. Arity-0 functions carry no weights; the executor
// satisfies them by fetching the example's input row.
struct ModuleImpl {
  ModuleSpec spec;
  std::vector<double> weights;
  std::vector<double> bias;
};

// Weights are seeded per function id, so re-creation from the same seed is
// bit-identical.
ModuleImpl make_module_impl(const ModuleSpec& spec, int width, std::uint64_t seed);

class ModuleSet {
 public:
  ModuleSet(const FunctionVocab& vocab, std::uint64_t seed);

  const ModuleImpl& impl(int function_id) const;
  int size() const { return static_cast<int>(impls_.size()); }
  int width() const { return width_; }
  std::int64_t weight_element_count() const;

 private:
  std::vector<ModuleImpl> impls_;
  int width_ = 0;
};

// One batched module call: row i of the output depends only on row i of the
// operands, and the per-row reduction order is fixed ascending-index, so a
// row computes to the same bits whether applied alone or inside a batch.
TensorBatch apply_module(const ModuleImpl& impl, std::span<const TensorBatch> operands);

}  // namespace dynbatch
