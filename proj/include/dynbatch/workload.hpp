// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynbatch/moe.hpp"
#include "dynbatch/program.hpp"
#include "dynbatch/tensor.hpp"

namespace dynbatch {

enum class WorkloadKind { balanced_tree, chain_heavy, random_dag, moe };

const char* workload_kind_name(WorkloadKind kind);
WorkloadKind workload_kind_from_name(const std::string& name);

// Fully determined by (fields, seed); identical specs generate identical
// batches byte for byte.
struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::chain_heavy;
  std::int64_t b = 1;
  int p = 8;
  int width = 8;
  int depth = 4;          // balanced_tree: tree levels
  int length = 8;         // chain_heavy / random_dag: max node count
  double branch_prob = 0.1;  // chain_heavy: branch rate; random_dag: leaf share rate
  std::uint64_t seed = 0;
};

// id 0 is the arity-0 free input provider; odd ids are arity-2 and even ids
// arity-1, all expensive.
FunctionVocab make_default_vocab(int p, int width);

// Full binary tree with `depth` levels: random arity-2 internals, arity-0
// leaves; node count 2^depth - 1, max label depth - 1.
Program gen_balanced_tree(int depth, const FunctionVocab& vocab, std::uint64_t seed);

// Mostly unary chain of exactly `length` nodes with binary branches at rate
// branch_prob (even split at each branch); branch_prob 0 is a pure chain,
// branch_prob 1 approaches a balanced tree.
Program gen_chain_heavy(int length, double branch_prob, const FunctionVocab& vocab,
                        std::uint64_t seed);

// Chain-heavy tree whose leaves are merged with probability share_prob, so
// some leaves have several parents; node count is at most `length`.
Program gen_random_dag(int length, double share_prob, const FunctionVocab& vocab,
                       std::uint64_t seed);

struct GeneratedBatch {
  FunctionVocab vocab;
  std::vector<Program> programs;
  TensorBatch inputs;  // b rows, vocab width
};

// b programs plus b seeded input rows. Program sizes for chain_heavy and
// random_dag vary per example in [length/2, length].
GeneratedBatch gen_batch(const WorkloadSpec& spec);

// Uniform rows in [-1, 1).
TensorBatch random_batch(std::int64_t rows, std::int64_t width, std::uint64_t seed);

struct MoeWorkload {
  TensorBatch inputs;  // b x data_dim
  TensorBatch scores;  // b x n gate scores
};

MoeWorkload gen_moe_inputs(const MoeConfig& cfg, std::uint64_t seed);

}  // namespace dynbatch
