// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynbatch/executor.hpp"

#include <algorithm>
#include <chrono>
#include <string>

namespace dynbatch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string ref_string(NodeRef ref) {
  return "(" + std::to_string(ref.example) + ", " + std::to_string(ref.node) + ")";
}

}  // namespace

ValueStore::ValueStore(std::span<const Program> batch, std::int64_t width)
    : width_(width), values_(batch.size()), present_(batch.size()) {
  if (width <= 0) throw_error(Errc::invalid_argument, "width must be positive");
  for (size_t e = 0; e < batch.size(); ++e) {
    values_[e].assign(static_cast<size_t>(batch[e].size()) * static_cast<size_t>(width), 0.0);
    present_[e].assign(static_cast<size_t>(batch[e].size()), 0);
  }
}

void ValueStore::check_ref(NodeRef ref) const {
  if (ref.example < 0 || ref.example >= static_cast<std::int32_t>(present_.size()) ||
      ref.node < 0 ||
      ref.node >= static_cast<std::int32_t>(present_[static_cast<size_t>(ref.example)].size())) {
    throw_error(Errc::invalid_argument, "node ref out of range " + ref_string(ref));
  }
}

bool ValueStore::has(NodeRef ref) const {
  check_ref(ref);
  return present_[static_cast<size_t>(ref.example)][static_cast<size_t>(ref.node)] != 0;
}

std::span<const double> ValueStore::row(NodeRef ref) const {
  if (!has(ref)) {
    throw_error(Errc::missing_operand, "no value for node " + ref_string(ref));
  }
  const auto& rows = values_[static_cast<size_t>(ref.example)];
  return {rows.data() + static_cast<size_t>(ref.node) * static_cast<size_t>(width_),
          static_cast<size_t>(width_)};
}

void ValueStore::set(NodeRef ref, std::span<const double> value) {
  check_ref(ref);
  if (static_cast<std::int64_t>(value.size()) != width_) {
    throw_error(Errc::width_mismatch, "row width " + std::to_string(value.size()));
  }
  auto& present = present_[static_cast<size_t>(ref.example)][static_cast<size_t>(ref.node)];
  if (present) {
    throw_error(Errc::single_assignment_violation, "node " + ref_string(ref) + " written twice");
  }
  std::copy(value.begin(), value.end(),
            values_[static_cast<size_t>(ref.example)].begin() +
                static_cast<std::int64_t>(ref.node) * width_);
  present = 1;
}

TensorBatch gather_rows(const ValueStore& store, std::span<const NodeRef> refs) {
  TensorBatch out(static_cast<std::int64_t>(refs.size()), store.width());
  for (size_t i = 0; i < refs.size(); ++i) {
    std::span<const double> src = store.row(refs[i]);
    std::copy(src.begin(), src.end(), out.row(static_cast<std::int64_t>(i)).begin());
  }
  return out;
}

void scatter_rows(ValueStore& store, std::span<const NodeRef> refs, const TensorBatch& values) {
  if (values.rows() != static_cast<std::int64_t>(refs.size())) {
    throw_error(Errc::row_count_mismatch,
                std::to_string(values.rows()) + " rows for " + std::to_string(refs.size()) +
                    " refs");
  }
  if (values.width() != store.width()) {
    throw_error(Errc::width_mismatch, "value width " + std::to_string(values.width()));
  }
  for (size_t i = 0; i < refs.size(); ++i) {
    store.set(refs[i], values.row(static_cast<std::int64_t>(i)));
  }
}

ExecResult execute(const Schedule& schedule, std::span<const Program> batch,
                   const TensorBatch& inputs, const ModuleSet& modules) {
  const std::int64_t b = static_cast<std::int64_t>(batch.size());
  const std::int64_t width = modules.width();
  if (inputs.rows() != b) {
    throw_error(Errc::row_count_mismatch,
                "inputs have " + std::to_string(inputs.rows()) + " rows for batch of " +
                    std::to_string(b));
  }
  if (b > 0 && inputs.width() != width) {
    throw_error(Errc::width_mismatch, "inputs width " + std::to_string(inputs.width()));
  }
  if (!inputs.all_finite()) throw_error(Errc::non_finite_value, "non-finite input");

  ExecResult result;
  result.trace.per_function_calls.assign(static_cast<size_t>(modules.size()), 0);

  ValueStore store(batch, width);
  std::vector<NodeRef> operand_refs;
  std::vector<TensorBatch> operands;

  const auto t_total = Clock::now();
  for (const Step& step : schedule.steps) {
    const auto t_step = Clock::now();
    for (const CallGroup& group : step) {
      const ModuleImpl& impl = modules.impl(group.function_id);
      const std::int64_t rows = static_cast<std::int64_t>(group.members.size());
      result.trace.peak_group_rows = std::max(result.trace.peak_group_rows, rows);
      ++result.trace.per_function_calls[static_cast<size_t>(group.function_id)];
      if (impl.spec.is_expensive()) ++result.trace.expensive_calls;

      if (impl.spec.arity == 0) {
        // Input providers copy the example's feature row; pure stacking.
        const auto t0 = Clock::now();
        TensorBatch fetched(rows, width);
        for (std::int64_t i = 0; i < rows; ++i) {
          std::span<const double> src = inputs.row(group.members[static_cast<size_t>(i)].example);
          std::copy(src.begin(), src.end(), fetched.row(i).begin());
        }
        scatter_rows(store, group.members, fetched);
        result.trace.stacking_seconds += seconds_since(t0);
        continue;
      }

      const auto t_gather = Clock::now();
      operands.clear();
      for (int k = 0; k < impl.spec.arity; ++k) {
        operand_refs.clear();
        for (const NodeRef& member : group.members) {
          const Program& program = batch[static_cast<size_t>(member.example)];
          operand_refs.push_back(
              {member.example, program.nodes[static_cast<size_t>(member.node)].children
                                   [static_cast<size_t>(k)]});
        }
        operands.push_back(gather_rows(store, operand_refs));
      }
      result.trace.stacking_seconds += seconds_since(t_gather);

      const auto t_apply = Clock::now();
      TensorBatch out = apply_module(impl, operands);
      result.trace.module_seconds += seconds_since(t_apply);
      if (!out.all_finite()) {
        throw_error(Errc::non_finite_value,
                    "function " + std::to_string(group.function_id) + " produced non-finite rows");
      }

      const auto t_scatter = Clock::now();
      scatter_rows(store, group.members, out);
      result.trace.stacking_seconds += seconds_since(t_scatter);
    }
    result.trace.per_step_seconds.push_back(seconds_since(t_step));
  }

  result.outputs = TensorBatch(b, width);
  for (std::int64_t e = 0; e < b; ++e) {
    std::span<const double> root =
        store.row({static_cast<std::int32_t>(e), batch[static_cast<size_t>(e)].root});
    std::copy(root.begin(), root.end(), result.outputs.row(e).begin());
  }
  result.trace.total_seconds = seconds_since(t_total);
  return result;
}

ExecResult execute(const Schedule& schedule, std::span<const Program> batch,
                   const TensorBatch& inputs, const FunctionVocab& vocab, std::uint64_t seed) {
  ModuleSet modules(vocab, seed);
  return execute(schedule, batch, inputs, modules);
}

}  // namespace dynbatch
