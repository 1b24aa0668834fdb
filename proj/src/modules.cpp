// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynbatch/modules.hpp"

#include <cmath>
#include <string>

#include "dynbatch/rng.hpp"

namespace dynbatch {

ModuleImpl make_module_impl(const ModuleSpec& spec, int width, std::uint64_t seed) {
  ModuleImpl impl;
  impl.spec = spec;
  if (spec.arity == 0) return impl;

  const int fan_in = spec.arity * width;
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(spec.function_id)));
  // Input-major layout: weights[i * width + j] multiplies concatenated
  // operand element i into output j.
  impl.weights.resize(static_cast<size_t>(width) * static_cast<size_t>(fan_in));
  for (double& w : impl.weights) w = rng.uniform(-0.5, 0.5) * scale;
  impl.bias.resize(static_cast<size_t>(width));
  for (double& b : impl.bias) b = rng.uniform(-0.5, 0.5) * scale;
  return impl;
}

ModuleSet::ModuleSet(const FunctionVocab& vocab, std::uint64_t seed) : width_(vocab.width()) {
  impls_.reserve(static_cast<size_t>(vocab.size()));
  for (const ModuleSpec& spec : vocab.specs()) {
    impls_.push_back(make_module_impl(spec, width_, seed));
  }
}

const ModuleImpl& ModuleSet::impl(int function_id) const {
  if (function_id < 0 || function_id >= static_cast<int>(impls_.size())) {
    throw_error(Errc::unknown_function, "function id " + std::to_string(function_id));
  }
  return impls_[static_cast<size_t>(function_id)];
}

std::int64_t ModuleSet::weight_element_count() const {
  std::int64_t count = 0;
  for (const ModuleImpl& impl : impls_) {
    count += static_cast<std::int64_t>(impl.weights.size() + impl.bias.size());
  }
  return count;
}

TensorBatch apply_module(const ModuleImpl& impl, std::span<const TensorBatch> operands) {
  const int arity = impl.spec.arity;
  if (arity == 0) {
    throw_error(Errc::arity_mismatch, "arity-0 functions fetch inputs, they are not applied");
  }
  if (static_cast<int>(operands.size()) != arity) {
    throw_error(Errc::arity_mismatch,
                "function " + std::to_string(impl.spec.function_id) + " expects " +
                    std::to_string(arity) + " operands, got " + std::to_string(operands.size()));
  }
  const std::int64_t rows = operands[0].rows();
  const std::int64_t width = impl.spec.out_width;
  for (const TensorBatch& operand : operands) {
    if (operand.rows() != rows) {
      throw_error(Errc::row_count_mismatch, "operand row counts differ");
    }
    if (operand.width() != width) {
      throw_error(Errc::width_mismatch,
                  "operand width " + std::to_string(operand.width()) + ", expected " +
                      std::to_string(width));
    }
  }

  // Output-stationary blocks: each weight row is loaded once per block of up
  // to kRowBlock rows, which is where grouped calls earn their throughput
  // over one-row calls. Every output accumulates in ascending input order
  // whatever the blocking, so a row computes to the same bits alone or
  // inside any batch.
  constexpr std::int64_t kRowBlock = 16;
  TensorBatch out(rows, width);
  std::vector<double> acc(static_cast<size_t>(std::min(kRowBlock, rows) * width));
  for (std::int64_t r0 = 0; r0 < rows; r0 += kRowBlock) {
    const std::int64_t nb = std::min(kRowBlock, rows - r0);
    for (std::int64_t t = 0; t < nb; ++t) {
      double* at = acc.data() + t * width;
      for (std::int64_t j = 0; j < width; ++j) at[j] = impl.bias[static_cast<size_t>(j)];
    }
    for (int k = 0; k < arity; ++k) {
      const TensorBatch& operand = operands[static_cast<size_t>(k)];
      for (std::int64_t i = 0; i < width; ++i) {
        const double* wrow =
            impl.weights.data() + (static_cast<std::int64_t>(k) * width + i) * width;
        for (std::int64_t t = 0; t < nb; ++t) {
          const double xi = operand.at(r0 + t, i);
          double* at = acc.data() + t * width;
          for (std::int64_t j = 0; j < width; ++j) at[j] += xi * wrow[j];
        }
      }
    }
    for (std::int64_t t = 0; t < nb; ++t) {
      const double* at = acc.data() + t * width;
      double* dst = out.row(r0 + t).data();
      for (std::int64_t j = 0; j < width; ++j) dst[j] = at[j] > 0.0 ? at[j] : 0.0;
    }
  }
  return out;
}

}  // namespace dynbatch
