// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "dynbatch/executor.hpp"
#include "dynbatch/program.hpp"
#include "dynbatch/schedule.hpp"
#include "dynbatch/workload.hpp"

namespace dynbatch {

struct ProgramSet {
  FunctionVocab vocab;
  std::vector<Program> programs;
};

// {"vocab": [{"id", "arity", "cost"}...], "programs": [[function_id,...],...]}
// Programs are prefix sequences, one per example; width is supplied by the
// caller since the wire format carries structure only.
std::string program_set_to_json(const FunctionVocab& vocab, std::span<const Program> programs);
ProgramSet program_set_from_json(const std::string& text, int width);

// steps -> groups -> {"function_id", "members": [[example, node],...]}
std::string schedule_to_json(const Schedule& schedule);

std::string trace_to_json(const ExecutionTrace& trace);

std::string workload_spec_to_json(const WorkloadSpec& spec);
WorkloadSpec workload_spec_from_json(const std::string& text);

std::string moe_config_to_json(const MoeConfig& cfg);
MoeConfig moe_config_from_json(const std::string& text);

}  // namespace dynbatch
