// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynbatch/workload.hpp"

#include <algorithm>

#include "dynbatch/rng.hpp"

namespace dynbatch {

const char* workload_kind_name(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::balanced_tree: return "balanced-tree";
    case WorkloadKind::chain_heavy: return "chain-heavy";
    case WorkloadKind::random_dag: return "random-dag";
    case WorkloadKind::moe: return "moe";
  }
  return "unknown";
}

WorkloadKind workload_kind_from_name(const std::string& name) {
  if (name == "balanced-tree" || name == "balanced_tree") return WorkloadKind::balanced_tree;
  if (name == "chain-heavy" || name == "chain_heavy") return WorkloadKind::chain_heavy;
  if (name == "random-dag" || name == "random_dag") return WorkloadKind::random_dag;
  if (name == "moe") return WorkloadKind::moe;
  throw_error(Errc::invalid_argument, "unknown workload kind '" + name + "'");
}

FunctionVocab make_default_vocab(int p, int width) {
  if (p < 1) throw_error(Errc::invalid_argument, "vocabulary size must be >= 1");
  if (width < 1) throw_error(Errc::invalid_argument, "width must be >= 1");
  std::vector<ModuleSpec> specs;
  specs.reserve(static_cast<size_t>(p));
  for (int id = 0; id < p; ++id) {
    ModuleSpec spec;
    spec.function_id = id;
    spec.in_width = width;
    spec.out_width = width;
    if (id == 0) {
      spec.arity = 0;
      spec.cost = CostClass::free;
    } else {
      spec.arity = (id % 2 == 1) ? 2 : 1;
      spec.cost = CostClass::expensive;
    }
    specs.push_back(spec);
  }
  return FunctionVocab(std::move(specs));
}

namespace {

std::vector<int> arity_pool(const FunctionVocab& vocab, int arity) {
  std::vector<int> pool;
  for (const ModuleSpec& spec : vocab.specs()) {
    if (spec.arity == arity) pool.push_back(spec.function_id);
  }
  return pool;
}

int pick(const std::vector<int>& pool, Rng& rng, int arity) {
  if (pool.empty()) {
    throw_error(Errc::vocab_missing_arity,
                "vocabulary has no arity-" + std::to_string(arity) + " function");
  }
  return pool[static_cast<size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
}

struct TreeBuilder {
  const std::vector<int>& leaves;
  const std::vector<int>& unaries;
  const std::vector<int>& binaries;
  double branch_prob;
  Rng& rng;
  Program& program;

  // Preorder construction; node ids follow prefix order.
  int build(int budget) {
    int id = static_cast<int>(program.nodes.size());
    program.nodes.push_back({});
    if (budget == 1) {
      program.nodes[static_cast<size_t>(id)].function_id = pick(leaves, rng, 0);
      return id;
    }
    if (budget >= 3 && rng.bernoulli(branch_prob)) {
      program.nodes[static_cast<size_t>(id)].function_id = pick(binaries, rng, 2);
      int left_budget = (budget - 1) / 2;
      int left = build(left_budget);
      int right = build(budget - 1 - left_budget);
      program.nodes[static_cast<size_t>(id)].children = {left, right};
      return id;
    }
    program.nodes[static_cast<size_t>(id)].function_id = pick(unaries, rng, 1);
    int child = build(budget - 1);
    program.nodes[static_cast<size_t>(id)].children = {child};
    return id;
  }
};

Program gen_tree(int length, double branch_prob, const FunctionVocab& vocab, Rng& rng) {
  if (length < 1) throw_error(Errc::invalid_argument, "length must be >= 1");
  std::vector<int> leaves = arity_pool(vocab, 0);
  std::vector<int> unaries = arity_pool(vocab, 1);
  std::vector<int> binaries = arity_pool(vocab, 2);
  Program program;
  program.nodes.reserve(static_cast<size_t>(length));
  program.root = 0;
  TreeBuilder builder{leaves, unaries, binaries, branch_prob, rng, program};
  builder.build(length);
  return program;
}

}  // namespace

Program gen_balanced_tree(int depth, const FunctionVocab& vocab, std::uint64_t seed) {
  if (depth < 1) throw_error(Errc::invalid_argument, "depth must be >= 1");
  std::vector<int> leaves = arity_pool(vocab, 0);
  std::vector<int> binaries = arity_pool(vocab, 2);
  Rng rng(seed);
  Program program;
  program.nodes.reserve((static_cast<size_t>(1) << depth) - 1);
  program.root = 0;

  struct Builder {
    const std::vector<int>& leaves;
    const std::vector<int>& binaries;
    int depth;
    Rng& rng;
    Program& program;

    int build(int level) {
      int id = static_cast<int>(program.nodes.size());
      program.nodes.push_back({});
      if (level == depth - 1) {
        program.nodes[static_cast<size_t>(id)].function_id = pick(leaves, rng, 0);
        return id;
      }
      program.nodes[static_cast<size_t>(id)].function_id = pick(binaries, rng, 2);
      int left = build(level + 1);
      int right = build(level + 1);
      program.nodes[static_cast<size_t>(id)].children = {left, right};
      return id;
    }
  };
  Builder{leaves, binaries, depth, rng, program}.build(0);
  return program;
}

Program gen_chain_heavy(int length, double branch_prob, const FunctionVocab& vocab,
                        std::uint64_t seed) {
  if (branch_prob < 0.0 || branch_prob > 1.0) {
    throw_error(Errc::invalid_argument, "branch_prob must be in [0, 1]");
  }
  Rng rng(seed);
  return gen_tree(length, branch_prob, vocab, rng);
}

Program gen_random_dag(int length, double share_prob, const FunctionVocab& vocab,
                       std::uint64_t seed) {
  if (share_prob < 0.0 || share_prob > 1.0) {
    throw_error(Errc::invalid_argument, "share_prob must be in [0, 1]");
  }
  Rng rng(seed);
  Program tree = gen_tree(length, 0.4, vocab, rng);

  std::vector<int> leaf_ids;
  for (int v = 0; v < tree.size(); ++v) {
    if (tree.nodes[static_cast<size_t>(v)].children.empty()) leaf_ids.push_back(v);
  }

  // Redirect some leaf references onto earlier kept leaves, then drop the
  // orphaned nodes. Arities are untouched, so the result stays valid.
  std::vector<char> removed(static_cast<size_t>(tree.size()), 0);
  std::vector<int> kept_leaves;
  std::vector<int> redirect(static_cast<size_t>(tree.size()));
  for (int v = 0; v < tree.size(); ++v) redirect[static_cast<size_t>(v)] = v;
  for (int leaf : leaf_ids) {
    if (!kept_leaves.empty() && rng.bernoulli(share_prob)) {
      int target = kept_leaves[static_cast<size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(kept_leaves.size()) - 1))];
      redirect[static_cast<size_t>(leaf)] = target;
      removed[static_cast<size_t>(leaf)] = 1;
    } else {
      kept_leaves.push_back(leaf);
    }
  }

  std::vector<int> new_id(static_cast<size_t>(tree.size()), -1);
  Program dag;
  dag.root = 0;
  for (int v = 0; v < tree.size(); ++v) {
    if (removed[static_cast<size_t>(v)]) continue;
    new_id[static_cast<size_t>(v)] = static_cast<int>(dag.nodes.size());
    dag.nodes.push_back({tree.nodes[static_cast<size_t>(v)].function_id, {}});
  }
  for (int v = 0; v < tree.size(); ++v) {
    if (removed[static_cast<size_t>(v)]) continue;
    for (int c : tree.nodes[static_cast<size_t>(v)].children) {
      dag.nodes[static_cast<size_t>(new_id[static_cast<size_t>(v)])].children.push_back(
          new_id[static_cast<size_t>(redirect[static_cast<size_t>(c)])]);
    }
  }
  return dag;
}

TensorBatch random_batch(std::int64_t rows, std::int64_t width, std::uint64_t seed) {
  TensorBatch out(rows, width);
  Rng rng(seed);
  for (double& v : out.data()) v = rng.uniform(-1.0, 1.0);
  return out;
}

GeneratedBatch gen_batch(const WorkloadSpec& spec) {
  if (spec.b < 0) throw_error(Errc::invalid_argument, "negative batch size");
  if (spec.kind == WorkloadKind::moe) {
    throw_error(Errc::invalid_argument, "moe workloads use gen_moe_inputs");
  }

  GeneratedBatch batch{make_default_vocab(spec.p, spec.width), {}, {}};
  batch.programs.reserve(static_cast<size_t>(spec.b));
  Rng rng(spec.seed);
  for (std::int64_t i = 0; i < spec.b; ++i) {
    std::uint64_t program_seed = mix_seed(spec.seed, 0x70c1u + static_cast<std::uint64_t>(i));
    switch (spec.kind) {
      case WorkloadKind::balanced_tree:
        batch.programs.push_back(gen_balanced_tree(spec.depth, batch.vocab, program_seed));
        break;
      case WorkloadKind::chain_heavy: {
        int length = static_cast<int>(rng.uniform_int(std::max(1, spec.length / 2), spec.length));
        batch.programs.push_back(
            gen_chain_heavy(length, spec.branch_prob, batch.vocab, program_seed));
        break;
      }
      case WorkloadKind::random_dag: {
        int length = static_cast<int>(rng.uniform_int(std::max(1, spec.length / 2), spec.length));
        batch.programs.push_back(
            gen_random_dag(length, spec.branch_prob, batch.vocab, program_seed));
        break;
      }
      case WorkloadKind::moe: break;  // rejected above
    }
  }
  batch.inputs = random_batch(spec.b, spec.width, mix_seed(spec.seed, 0x1127u));
  return batch;
}

MoeWorkload gen_moe_inputs(const MoeConfig& cfg, std::uint64_t seed) {
  cfg.check();
  MoeWorkload workload;
  workload.inputs = random_batch(cfg.batch, cfg.data_dim, mix_seed(seed, 0x10u));
  workload.scores = random_batch(cfg.batch, cfg.experts, mix_seed(seed, 0x11u));
  return workload;
}

}  // namespace dynbatch
