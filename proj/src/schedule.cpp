// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynbatch/schedule.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace dynbatch {

const char* strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::naive: return "naive";
    case Strategy::standard: return "standard";
    case Strategy::improved: return "improved";
    case Strategy::online: return "online";
  }
  return "unknown";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "naive") return Strategy::naive;
  if (name == "standard") return Strategy::standard;
  if (name == "improved") return Strategy::improved;
  if (name == "online") return Strategy::online;
  throw_error(Errc::invalid_argument, "unknown strategy '" + name + "'");
}

const char* schedule_violation_name(ScheduleViolationKind kind) {
  switch (kind) {
    case ScheduleViolationKind::invalid_ref: return "InvalidRef";
    case ScheduleViolationKind::function_mismatch: return "FunctionMismatch";
    case ScheduleViolationKind::empty_group: return "EmptyGroup";
    case ScheduleViolationKind::duplicate_execution: return "DuplicateExecution";
    case ScheduleViolationKind::missing_execution: return "MissingExecution";
    case ScheduleViolationKind::dependency_order_violation: return "DependencyOrderViolation";
  }
  return "UnknownViolation";
}

std::string ScheduleReport::to_string() const {
  if (ok()) return "ok";
  std::ostringstream out;
  for (size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << schedule_violation_name(violations[i].kind) << ": " << violations[i].detail;
  }
  return out.str();
}

namespace {

void require_valid_batch(std::span<const Program> batch, const FunctionVocab& vocab) {
  for (size_t e = 0; e < batch.size(); ++e) {
    ValidationReport report = validate(batch[e], vocab);
    if (!report.ok()) {
      throw_error(Errc::invalid_program,
                  "example " + std::to_string(e) + ": " + report.to_string());
    }
  }
}

// (function_id, example, node) sort then sweep into groups. Gives ascending
// function ids per step and (example, node)-ordered members.
Step make_step(std::vector<FrontierItem>& items) {
  std::sort(items.begin(), items.end(), [](const FrontierItem& a, const FrontierItem& b) {
    if (a.function_id != b.function_id) return a.function_id < b.function_id;
    return a.ref < b.ref;
  });
  Step step;
  for (const FrontierItem& item : items) {
    if (step.empty() || step.back().function_id != item.function_id) {
      step.push_back({item.function_id, {}});
    }
    step.back().members.push_back(item.ref);
  }
  return step;
}

}  // namespace

BatchStats compute_batch_stats(std::span<const Program> batch, const FunctionVocab& vocab) {
  BatchStats stats;
  stats.b = static_cast<std::int64_t>(batch.size());
  stats.p = vocab.size();
  for (const Program& program : batch) {
    stats.s_max = std::max<std::int64_t>(stats.s_max, program.size());
    stats.d_max = std::max<std::int64_t>(stats.d_max, max_root_distance_labels(program).max_label);
  }
  return stats;
}

Schedule schedule_naive(std::span<const Program> batch, const FunctionVocab& vocab) {
  require_valid_batch(batch, vocab);
  Schedule schedule{Strategy::naive, {}};
  for (size_t e = 0; e < batch.size(); ++e) {
    for (int node : postorder_flatten(batch[e])) {
      CallGroup group{batch[e].nodes[static_cast<size_t>(node)].function_id,
                      {NodeRef{static_cast<std::int32_t>(e), node}}};
      schedule.steps.push_back({std::move(group)});
    }
  }
  return schedule;
}

Schedule schedule_standard(std::span<const Program> batch, const FunctionVocab& vocab) {
  require_valid_batch(batch, vocab);

  std::vector<std::vector<int>> flat;
  flat.reserve(batch.size());
  size_t s_max = 0;
  for (const Program& program : batch) {
    flat.push_back(postorder_flatten(program));
    s_max = std::max(s_max, flat.back().size());
  }

  Schedule schedule{Strategy::standard, {}};
  schedule.steps.reserve(s_max);
  std::vector<FrontierItem> column;
  for (size_t col = 0; col < s_max; ++col) {
    column.clear();
    // Shorter programs contribute nothing past their length; no padding.
    for (size_t e = 0; e < batch.size(); ++e) {
      if (col >= flat[e].size()) continue;
      int node = flat[e][col];
      column.push_back({NodeRef{static_cast<std::int32_t>(e), node},
                        batch[e].nodes[static_cast<size_t>(node)].function_id});
    }
    schedule.steps.push_back(make_step(column));
  }
  return schedule;
}

Schedule schedule_improved(std::span<const Program> batch, const FunctionVocab& vocab) {
  require_valid_batch(batch, vocab);

  int d_max = 0;
  std::vector<DepthLabels> labels;
  labels.reserve(batch.size());
  for (const Program& program : batch) {
    labels.push_back(max_root_distance_labels(program));
    d_max = std::max(d_max, labels.back().max_label);
  }

  std::vector<std::vector<FrontierItem>> pools;
  if (!batch.empty()) pools.resize(static_cast<size_t>(d_max) + 1);
  for (size_t e = 0; e < batch.size(); ++e) {
    for (int node = 0; node < batch[e].size(); ++node) {
      int label = labels[e].labels[static_cast<size_t>(node)];
      pools[static_cast<size_t>(label)].push_back(
          {NodeRef{static_cast<std::int32_t>(e), node},
           batch[e].nodes[static_cast<size_t>(node)].function_id});
    }
  }

  // Deepest pool first so every child precedes its parents.
  Schedule schedule{Strategy::improved, {}};
  schedule.steps.reserve(pools.size());
  for (auto it = pools.rbegin(); it != pools.rend(); ++it) {
    schedule.steps.push_back(make_step(*it));
  }
  return schedule;
}

Step group_by_function(std::span<const FrontierItem> items) {
  std::vector<FrontierItem> copy(items.begin(), items.end());
  return make_step(copy);
}

Step schedule_online(std::span<const Program> batch, std::span<const NodeRef> frontier,
                     const std::function<bool(NodeRef)>& already_executed,
                     const FunctionVocab& vocab) {
  std::vector<FrontierItem> items;
  items.reserve(frontier.size());
  for (const NodeRef& ref : frontier) {
    if (ref.example < 0 || ref.example >= static_cast<std::int32_t>(batch.size())) {
      throw_error(Errc::invalid_argument, "frontier example out of range");
    }
    const Program& program = batch[static_cast<size_t>(ref.example)];
    if (ref.node < 0 || ref.node >= program.size()) {
      throw_error(Errc::invalid_argument, "frontier node out of range");
    }
    const ProgramNode& node = program.nodes[static_cast<size_t>(ref.node)];
    for (int c : node.children) {
      if (!already_executed(NodeRef{ref.example, c})) {
        throw_error(Errc::dependency_violation,
                    "frontier node (" + std::to_string(ref.example) + ", " +
                        std::to_string(ref.node) + ") depends on unexecuted node " +
                        std::to_string(c));
      }
    }
    if (!vocab.contains(node.function_id)) {
      throw_error(Errc::unknown_function, "function id " + std::to_string(node.function_id));
    }
    items.push_back({ref, node.function_id});
  }
  return make_step(items);
}

Schedule schedule_online_full(std::span<const Program> batch, const FunctionVocab& vocab) {
  require_valid_batch(batch, vocab);

  std::vector<std::vector<char>> executed(batch.size());
  std::int64_t remaining = 0;
  for (size_t e = 0; e < batch.size(); ++e) {
    executed[e].assign(static_cast<size_t>(batch[e].size()), 0);
    remaining += batch[e].size();
  }
  auto is_executed = [&executed](NodeRef ref) {
    return executed[static_cast<size_t>(ref.example)][static_cast<size_t>(ref.node)] != 0;
  };

  Schedule schedule{Strategy::online, {}};
  std::vector<NodeRef> frontier;
  while (remaining > 0) {
    frontier.clear();
    for (size_t e = 0; e < batch.size(); ++e) {
      for (int node = 0; node < batch[e].size(); ++node) {
        if (executed[e][static_cast<size_t>(node)]) continue;
        bool ready = true;
        for (int c : batch[e].nodes[static_cast<size_t>(node)].children) {
          if (!executed[e][static_cast<size_t>(c)]) {
            ready = false;
            break;
          }
        }
        if (ready) frontier.push_back({static_cast<std::int32_t>(e), node});
      }
    }
    if (frontier.empty()) {
      throw_error(Errc::invalid_program, "no ready nodes but work remains");
    }
    schedule.steps.push_back(schedule_online(batch, frontier, is_executed, vocab));
    for (const NodeRef& ref : frontier) {
      executed[static_cast<size_t>(ref.example)][static_cast<size_t>(ref.node)] = 1;
    }
    remaining -= static_cast<std::int64_t>(frontier.size());
  }
  return schedule;
}

Schedule build_schedule(Strategy strategy, std::span<const Program> batch,
                        const FunctionVocab& vocab) {
  switch (strategy) {
    case Strategy::naive: return schedule_naive(batch, vocab);
    case Strategy::standard: return schedule_standard(batch, vocab);
    case Strategy::improved: return schedule_improved(batch, vocab);
    case Strategy::online: return schedule_online_full(batch, vocab);
  }
  throw_error(Errc::invalid_argument, "unknown strategy");
}

ScheduleReport verify_schedule(const Schedule& schedule, std::span<const Program> batch) {
  ScheduleReport report;
  auto add = [&report](ScheduleViolationKind kind, std::string detail) {
    report.violations.push_back({kind, std::move(detail)});
  };

  // step_of[(e, n)] = 1 + step index, 0 = unseen.
  std::vector<std::vector<std::int64_t>> step_of(batch.size());
  for (size_t e = 0; e < batch.size(); ++e) {
    step_of[e].assign(static_cast<size_t>(batch[e].size()), 0);
  }

  for (size_t s = 0; s < schedule.steps.size(); ++s) {
    for (const CallGroup& group : schedule.steps[s]) {
      if (group.members.empty()) {
        add(ScheduleViolationKind::empty_group,
            "step " + std::to_string(s) + " has an empty group");
        continue;
      }
      for (const NodeRef& ref : group.members) {
        if (ref.example < 0 || ref.example >= static_cast<std::int32_t>(batch.size()) ||
            ref.node < 0 ||
            ref.node >= batch[static_cast<size_t>(ref.example)].size()) {
          add(ScheduleViolationKind::invalid_ref,
              "(" + std::to_string(ref.example) + ", " + std::to_string(ref.node) + ")");
          continue;
        }
        const Program& program = batch[static_cast<size_t>(ref.example)];
        if (program.nodes[static_cast<size_t>(ref.node)].function_id != group.function_id) {
          add(ScheduleViolationKind::function_mismatch,
              "(" + std::to_string(ref.example) + ", " + std::to_string(ref.node) +
                  ") in group of function " + std::to_string(group.function_id));
        }
        auto& slot = step_of[static_cast<size_t>(ref.example)][static_cast<size_t>(ref.node)];
        if (slot != 0) {
          add(ScheduleViolationKind::duplicate_execution,
              "(" + std::to_string(ref.example) + ", " + std::to_string(ref.node) +
                  ") in steps " + std::to_string(slot - 1) + " and " + std::to_string(s));
        } else {
          slot = static_cast<std::int64_t>(s) + 1;
        }
      }
    }
  }

  for (size_t e = 0; e < batch.size(); ++e) {
    for (int node = 0; node < batch[e].size(); ++node) {
      if (step_of[e][static_cast<size_t>(node)] == 0) {
        add(ScheduleViolationKind::missing_execution,
            "(" + std::to_string(e) + ", " + std::to_string(node) + ") never executes");
      }
    }
  }

  for (size_t e = 0; e < batch.size(); ++e) {
    for (int parent = 0; parent < batch[e].size(); ++parent) {
      std::int64_t parent_step = step_of[e][static_cast<size_t>(parent)];
      if (parent_step == 0) continue;
      for (int child : batch[e].nodes[static_cast<size_t>(parent)].children) {
        std::int64_t child_step = step_of[e][static_cast<size_t>(child)];
        if (child_step == 0) continue;
        if (child_step >= parent_step) {
          add(ScheduleViolationKind::dependency_order_violation,
              "child (" + std::to_string(e) + ", " + std::to_string(child) + ") in step " +
                  std::to_string(child_step - 1) + ", parent (" + std::to_string(e) + ", " +
                  std::to_string(parent) + ") in step " + std::to_string(parent_step - 1));
        }
      }
    }
  }
  return report;
}

std::int64_t count_expensive_calls(const Schedule& schedule, const FunctionVocab& vocab) {
  std::int64_t calls = 0;
  for (const Step& step : schedule.steps) {
    for (const CallGroup& group : step) {
      if (vocab.spec(group.function_id).is_expensive()) ++calls;
    }
  }
  return calls;
}

std::int64_t count_expensive_nodes(std::span<const Program> batch, const FunctionVocab& vocab) {
  std::int64_t count = 0;
  for (const Program& program : batch) {
    for (const ProgramNode& node : program.nodes) {
      if (vocab.spec(node.function_id).is_expensive()) ++count;
    }
  }
  return count;
}

std::int64_t count_total_nodes(std::span<const Program> batch) {
  std::int64_t count = 0;
  for (const Program& program : batch) count += program.size();
  return count;
}

}  // namespace dynbatch
