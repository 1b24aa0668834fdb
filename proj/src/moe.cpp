// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynbatch/moe.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "dynbatch/rng.hpp"
#include "dynbatch/schedule.hpp"

namespace dynbatch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

void MoeConfig::check() const {
  if (experts < 1) throw_error(Errc::invalid_argument, "need at least one expert");
  if (active_per_example < 1 || active_per_example > experts) {
    throw_error(Errc::invalid_argument, "k must satisfy 1 <= k <= n");
  }
  if (batch < 1) throw_error(Errc::invalid_argument, "batch must be >= 1");
  if (data_dim < 1 || hidden < 1) throw_error(Errc::invalid_argument, "dims must be >= 1");
  if (examples_per_expert < 0) throw_error(Errc::invalid_argument, "m must be >= 0");
}

GateAssignment top_k_gate(const TensorBatch& scores, std::int64_t k) {
  const std::int64_t n = scores.width();
  if (k < 1 || k > n) {
    throw_error(Errc::k_too_large, "k=" + std::to_string(k) + " with n=" + std::to_string(n));
  }
  if (!scores.all_finite()) throw_error(Errc::non_finite_value, "non-finite gate score");

  GateAssignment gates;
  gates.per_example.resize(static_cast<size_t>(scores.rows()));
  std::vector<std::pair<double, int>> ranked(static_cast<size_t>(n));
  for (std::int64_t e = 0; e < scores.rows(); ++e) {
    for (std::int64_t j = 0; j < n; ++j) {
      ranked[static_cast<size_t>(j)] = {scores.at(e, j), static_cast<int>(j)};
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });

    auto& entries = gates.per_example[static_cast<size_t>(e)];
    entries.resize(static_cast<size_t>(k));
    double max_score = ranked[0].first;
    double denom = 0.0;
    for (std::int64_t i = 0; i < k; ++i) {
      denom += std::exp(ranked[static_cast<size_t>(i)].first - max_score);
    }
    for (std::int64_t i = 0; i < k; ++i) {
      entries[static_cast<size_t>(i)] = {
          ranked[static_cast<size_t>(i)].second,
          std::exp(ranked[static_cast<size_t>(i)].first - max_score) / denom};
    }
  }
  return gates;
}

ExpertSet::ExpertSet(std::int64_t experts, std::int64_t data_dim, std::int64_t hidden,
                     std::uint64_t seed)
    : data_dim_(data_dim), hidden_(hidden) {
  if (experts < 1 || data_dim < 1 || hidden < 1) {
    throw_error(Errc::invalid_argument, "expert set dims must be >= 1");
  }
  const double scale1 = 1.0 / std::sqrt(static_cast<double>(data_dim));
  const double scale2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  experts_.resize(static_cast<size_t>(experts));
  for (std::int64_t id = 0; id < experts; ++id) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(id)));
    Expert& expert = experts_[static_cast<size_t>(id)];
    expert.w1.resize(static_cast<size_t>(hidden * data_dim));
    for (double& w : expert.w1) w = rng.uniform(-0.5, 0.5) * scale1;
    expert.w2.resize(static_cast<size_t>(data_dim * hidden));
    for (double& w : expert.w2) w = rng.uniform(-0.5, 0.5) * scale2;
  }
}

std::int64_t ExpertSet::weight_element_count() const {
  std::int64_t count = 0;
  for (const Expert& expert : experts_) {
    count += static_cast<std::int64_t>(expert.w1.size() + expert.w2.size());
  }
  return count;
}

TensorBatch ExpertSet::apply(std::int64_t expert_id, const TensorBatch& rows) const {
  if (expert_id < 0 || expert_id >= size()) {
    throw_error(Errc::invalid_argument, "expert id " + std::to_string(expert_id));
  }
  if (rows.width() != data_dim_) {
    throw_error(Errc::width_mismatch, "expert input width " + std::to_string(rows.width()));
  }
  const Expert& expert = experts_[static_cast<size_t>(expert_id)];

  // Same output-stationary blocking as the program-module kernel: weight
  // rows are reused across the block, per-row accumulation order is fixed
  // ascending-index.
  constexpr std::int64_t kRowBlock = 16;
  TensorBatch out(rows.rows(), data_dim_);
  const std::int64_t block = std::min(kRowBlock, std::max<std::int64_t>(rows.rows(), 1));
  std::vector<double> hidden_acc(static_cast<size_t>(block * hidden_));
  std::vector<double> out_acc(static_cast<size_t>(block * data_dim_));
  for (std::int64_t r0 = 0; r0 < rows.rows(); r0 += kRowBlock) {
    const std::int64_t nb = std::min(kRowBlock, rows.rows() - r0);
    std::fill(hidden_acc.begin(), hidden_acc.begin() + nb * hidden_, 0.0);
    for (std::int64_t i = 0; i < data_dim_; ++i) {
      const double* wrow = expert.w1.data() + i * hidden_;
      for (std::int64_t t = 0; t < nb; ++t) {
        const double xi = rows.at(r0 + t, i);
        double* ht = hidden_acc.data() + t * hidden_;
        for (std::int64_t j = 0; j < hidden_; ++j) ht[j] += xi * wrow[j];
      }
    }
    for (std::int64_t t = 0; t < nb; ++t) {
      double* ht = hidden_acc.data() + t * hidden_;
      for (std::int64_t j = 0; j < hidden_; ++j) ht[j] = ht[j] > 0.0 ? ht[j] : 0.0;
    }
    std::fill(out_acc.begin(), out_acc.begin() + nb * data_dim_, 0.0);
    for (std::int64_t i = 0; i < hidden_; ++i) {
      const double* wrow = expert.w2.data() + i * data_dim_;
      for (std::int64_t t = 0; t < nb; ++t) {
        const double hi = hidden_acc[static_cast<size_t>(t * hidden_ + i)];
        double* ot = out_acc.data() + t * data_dim_;
        for (std::int64_t j = 0; j < data_dim_; ++j) ot[j] += hi * wrow[j];
      }
    }
    for (std::int64_t t = 0; t < nb; ++t) {
      std::copy(out_acc.begin() + t * data_dim_, out_acc.begin() + (t + 1) * data_dim_,
                out.row(r0 + t).begin());
    }
  }
  return out;
}

namespace {

void check_moe_args(const TensorBatch& inputs, const ExpertSet& experts,
                    const GateAssignment& gates) {
  if (inputs.width() != experts.data_dim()) {
    throw_error(Errc::width_mismatch, "inputs width " + std::to_string(inputs.width()));
  }
  if (gates.per_example.size() != static_cast<size_t>(inputs.rows())) {
    throw_error(Errc::row_count_mismatch, "gate assignment rows do not match inputs");
  }
  if (!inputs.all_finite()) throw_error(Errc::non_finite_value, "non-finite input");
}

}  // namespace

MoeResult moe_forward_naive(const TensorBatch& inputs, const ExpertSet& experts,
                            const GateAssignment& gates) {
  check_moe_args(inputs, experts, gates);
  const std::int64_t b = inputs.rows();
  const std::int64_t d = experts.data_dim();

  MoeResult result;
  result.outputs = TensorBatch(b, d);
  result.trace.per_function_calls.assign(static_cast<size_t>(experts.size()), 0);

  const auto t_total = Clock::now();
  for (std::int64_t e = 0; e < b; ++e) {
    for (const GateEntry& entry : gates.per_example[static_cast<size_t>(e)]) {
      const auto t_stack = Clock::now();
      TensorBatch one(1, d);
      std::span<const double> src = inputs.row(e);
      std::copy(src.begin(), src.end(), one.row(0).begin());
      result.trace.stacking_seconds += seconds_since(t_stack);

      const auto t_apply = Clock::now();
      TensorBatch y = experts.apply(entry.expert, one);
      result.trace.module_seconds += seconds_since(t_apply);
      ++result.trace.expensive_calls;
      ++result.trace.per_function_calls[static_cast<size_t>(entry.expert)];
      result.trace.peak_group_rows = std::max<std::int64_t>(result.trace.peak_group_rows, 1);

      const auto t_combine = Clock::now();
      for (std::int64_t j = 0; j < d; ++j) {
        result.outputs.at(e, j) += entry.weight * y.at(0, j);
      }
      result.trace.stacking_seconds += seconds_since(t_combine);
    }
  }
  result.trace.total_seconds = seconds_since(t_total);
  if (!result.outputs.all_finite()) throw_error(Errc::non_finite_value, "non-finite output");
  return result;
}

MoeResult moe_forward_batched(const TensorBatch& inputs, const ExpertSet& experts,
                              const GateAssignment& gates) {
  check_moe_args(inputs, experts, gates);
  const std::int64_t b = inputs.rows();
  const std::int64_t d = experts.data_dim();

  MoeResult result;
  result.outputs = TensorBatch(b, d);
  result.trace.per_function_calls.assign(static_cast<size_t>(experts.size()), 0);

  const auto t_total = Clock::now();

  // All k*b assignments are known up front; one frontier step groups them by
  // expert. NodeRef.node doubles as the gate slot index.
  std::int64_t k_max = 0;
  std::vector<FrontierItem> assignments;
  for (std::int64_t e = 0; e < b; ++e) {
    const auto& entries = gates.per_example[static_cast<size_t>(e)];
    k_max = std::max<std::int64_t>(k_max, static_cast<std::int64_t>(entries.size()));
    for (size_t slot = 0; slot < entries.size(); ++slot) {
      assignments.push_back({NodeRef{static_cast<std::int32_t>(e), static_cast<std::int32_t>(slot)},
                             entries[slot].expert});
    }
  }
  Step step = group_by_function(assignments);

  TensorBatch staged(b * k_max, d);
  for (const CallGroup& group : step) {
    const auto t_gather = Clock::now();
    TensorBatch stacked(static_cast<std::int64_t>(group.members.size()), d);
    for (size_t i = 0; i < group.members.size(); ++i) {
      std::span<const double> src = inputs.row(group.members[i].example);
      std::copy(src.begin(), src.end(), stacked.row(static_cast<std::int64_t>(i)).begin());
    }
    result.trace.stacking_seconds += seconds_since(t_gather);

    const auto t_apply = Clock::now();
    TensorBatch y = experts.apply(group.function_id, stacked);
    result.trace.module_seconds += seconds_since(t_apply);
    ++result.trace.expensive_calls;
    ++result.trace.per_function_calls[static_cast<size_t>(group.function_id)];
    result.trace.peak_group_rows =
        std::max<std::int64_t>(result.trace.peak_group_rows, y.rows());

    const auto t_scatter = Clock::now();
    for (size_t i = 0; i < group.members.size(); ++i) {
      std::span<const double> src = y.row(static_cast<std::int64_t>(i));
      std::span<double> dst =
          staged.row(group.members[i].example * k_max + group.members[i].node);
      std::copy(src.begin(), src.end(), dst.begin());
    }
    result.trace.stacking_seconds += seconds_since(t_scatter);
  }

  // Combine in slot order, matching the naive accumulation order exactly.
  const auto t_combine = Clock::now();
  for (std::int64_t e = 0; e < b; ++e) {
    const auto& entries = gates.per_example[static_cast<size_t>(e)];
    for (size_t slot = 0; slot < entries.size(); ++slot) {
      std::span<const double> src = staged.row(e * k_max + static_cast<std::int64_t>(slot));
      for (std::int64_t j = 0; j < d; ++j) {
        result.outputs.at(e, j) += entries[slot].weight * src[static_cast<size_t>(j)];
      }
    }
  }
  result.trace.stacking_seconds += seconds_since(t_combine);
  result.trace.per_step_seconds.push_back(seconds_since(t_total));
  result.trace.total_seconds = seconds_since(t_total);
  if (!result.outputs.all_finite()) throw_error(Errc::non_finite_value, "non-finite output");
  return result;
}

std::int64_t moe_param_count(const MoeConfig& cfg) {
  cfg.check();
  return 2 * cfg.hidden * cfg.experts * cfg.data_dim;
}

double moe_activation_count(const MoeConfig& cfg) {
  cfg.check();
  return static_cast<double>(cfg.experts) * cfg.examples_per_expert *
         static_cast<double>(2 * cfg.data_dim + cfg.hidden) /
         static_cast<double>(cfg.active_per_example);
}

double moe_memory_ratio(const MoeConfig& cfg) {
  cfg.check();
  return cfg.examples_per_expert * static_cast<double>(2 * cfg.data_dim + cfg.hidden) /
         (2.0 * static_cast<double>(cfg.active_per_example) * static_cast<double>(cfg.hidden) *
          static_cast<double>(cfg.data_dim));
}

}  // namespace dynbatch
