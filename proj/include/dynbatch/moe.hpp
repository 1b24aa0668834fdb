// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "dynbatch/executor.hpp"
#include "dynbatch/tensor.hpp"

namespace dynbatch {

// Sparsely gated mixture of experts: n one-hidden-layer expert networks of
// which k run per example.
struct MoeConfig {
  std::int64_t experts = 1;             // n
  std::int64_t active_per_example = 1;  // k
  std::int64_t batch = 1;               // b
  std::int64_t data_dim = 1;            // input/output width
  std::int64_t hidden = 1;              // expert hidden width
  double examples_per_expert = 0.0;     // m, memory model only

  void check() const;
};

struct GateEntry {
  int expert = 0;
  double weight = 0.0;
};

// Exactly k entries per example, distinct experts, weights summing to 1.
struct GateAssignment {
  std::vector<std::vector<GateEntry>> per_example;
};

// Per example, the k largest scores win (ties to the lower expert id); the
// selected raw scores are softmax-normalized into gate weights.
GateAssignment top_k_gate(const TensorBatch& scores, std::int64_t k);

// y = W2 * relu(W1 * x); no biases, so each expert holds exactly
// hidden*data_dim + data_dim*hidden weight elements. Both matrices are
// stored input-major.
struct Expert {
  std::vector<double> w1;  // data_dim x hidden: w1[i*hidden + j]
  std::vector<double> w2;  // hidden x data_dim: w2[i*data_dim + j]
};

class ExpertSet {
 public:
  ExpertSet(std::int64_t experts, std::int64_t data_dim, std::int64_t hidden, std::uint64_t seed);

  std::int64_t size() const { return static_cast<std::int64_t>(experts_.size()); }
  std::int64_t data_dim() const { return data_dim_; }
  std::int64_t hidden() const { return hidden_; }
  std::int64_t weight_element_count() const;

  // Row-independent, fixed reduction order; one call regardless of rows.
  TensorBatch apply(std::int64_t expert_id, const TensorBatch& rows) const;

 private:
  std::vector<Expert> experts_;
  std::int64_t data_dim_;
  std::int64_t hidden_;
};

struct MoeResult {
  TensorBatch outputs;
  ExecutionTrace trace;  // module_seconds = expert execution time
};

// Loops over all k*b assignments one row at a time: exactly k*b expert calls.
MoeResult moe_forward_naive(const TensorBatch& inputs, const ExpertSet& experts,
                            const GateAssignment& gates);

// Groups the k*b assignments by expert and runs each occupied expert once on
// its stacked rows: at most n expert calls. Outputs match the naive path.
MoeResult moe_forward_batched(const TensorBatch& inputs, const ExpertSet& experts,
                              const GateAssignment& gates);

// Memory model for giant expert pools.
std::int64_t moe_param_count(const MoeConfig& cfg);       // 2*hidden*n*data_dim
double moe_activation_count(const MoeConfig& cfg);        // n*m*(2*data_dim+hidden)/k
double moe_memory_ratio(const MoeConfig& cfg);            // m*(2*data_dim+hidden)/(2*k*hidden*data_dim)

}  // namespace dynbatch
