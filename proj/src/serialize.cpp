// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynbatch/serialize.hpp"

#include <json.hpp>

namespace dynbatch {

using nlohmann::json;

namespace {

json vocab_to_json(const FunctionVocab& vocab) {
  json out = json::array();
  for (const ModuleSpec& spec : vocab.specs()) {
    out.push_back({{"id", spec.function_id},
                   {"arity", spec.arity},
                   {"cost", spec.is_expensive() ? "expensive" : "free"}});
  }
  return out;
}

}  // namespace

std::string program_set_to_json(const FunctionVocab& vocab, std::span<const Program> programs) {
  json out;
  out["vocab"] = vocab_to_json(vocab);
  json progs = json::array();
  for (const Program& program : programs) {
    progs.push_back(prefix_function_sequence(program));
  }
  out["programs"] = std::move(progs);
  return out.dump(2);
}

ProgramSet program_set_from_json(const std::string& text, int width) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw_error(Errc::parse_error, e.what());
  }
  if (!doc.is_object() || !doc.contains("vocab") || !doc.contains("programs")) {
    throw_error(Errc::parse_error, "expected {\"vocab\": [...], \"programs\": [...]}");
  }

  std::vector<ModuleSpec> specs;
  try {
    for (const json& entry : doc["vocab"]) {
      ModuleSpec spec;
      spec.function_id = entry.at("id").get<int>();
      spec.arity = entry.at("arity").get<int>();
      spec.in_width = width;
      spec.out_width = width;
      std::string cost = entry.at("cost").get<std::string>();
      if (cost == "expensive") {
        spec.cost = CostClass::expensive;
      } else if (cost == "free") {
        spec.cost = CostClass::free;
      } else {
        throw_error(Errc::parse_error, "cost must be 'expensive' or 'free', got '" + cost + "'");
      }
      specs.push_back(spec);
    }
  } catch (const json::exception& e) {
    throw_error(Errc::parse_error, e.what());
  }

  ProgramSet set{FunctionVocab(std::move(specs)), {}};
  try {
    for (const json& seq : doc["programs"]) {
      std::vector<int> functions = seq.get<std::vector<int>>();
      set.programs.push_back(build_program_from_prefix(functions, set.vocab));
    }
  } catch (const json::exception& e) {
    throw_error(Errc::parse_error, e.what());
  }
  return set;
}

std::string schedule_to_json(const Schedule& schedule) {
  json out;
  out["strategy"] = strategy_name(schedule.strategy);
  json steps = json::array();
  for (const Step& step : schedule.steps) {
    json groups = json::array();
    for (const CallGroup& group : step) {
      json members = json::array();
      for (const NodeRef& ref : group.members) {
        members.push_back({ref.example, ref.node});
      }
      groups.push_back({{"function_id", group.function_id}, {"members", std::move(members)}});
    }
    steps.push_back(std::move(groups));
  }
  out["steps"] = std::move(steps);
  return out.dump(2);
}

std::string trace_to_json(const ExecutionTrace& trace) {
  json calls = json::object();
  for (size_t fid = 0; fid < trace.per_function_calls.size(); ++fid) {
    if (trace.per_function_calls[fid] > 0) {
      calls[std::to_string(fid)] = trace.per_function_calls[fid];
    }
  }
  json out{{"expensive_calls", trace.expensive_calls},
           {"per_function_calls", std::move(calls)},
           {"per_step_seconds", trace.per_step_seconds},
           {"module_seconds", trace.module_seconds},
           {"stacking_seconds", trace.stacking_seconds},
           {"total_seconds", trace.total_seconds},
           {"peak_group_rows", trace.peak_group_rows}};
  return out.dump(2);
}

std::string workload_spec_to_json(const WorkloadSpec& spec) {
  json out{{"kind", workload_kind_name(spec.kind)},
           {"b", spec.b},
           {"p", spec.p},
           {"width", spec.width},
           {"depth", spec.depth},
           {"length", spec.length},
           {"branch_prob", spec.branch_prob},
           {"seed", spec.seed}};
  return out.dump(2);
}

WorkloadSpec workload_spec_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw_error(Errc::parse_error, e.what());
  }
  WorkloadSpec spec;
  try {
    spec.kind = workload_kind_from_name(doc.at("kind").get<std::string>());
    spec.b = doc.value("b", spec.b);
    spec.p = doc.value("p", spec.p);
    spec.width = doc.value("width", spec.width);
    spec.depth = doc.value("depth", spec.depth);
    spec.length = doc.value("length", spec.length);
    spec.branch_prob = doc.value("branch_prob", spec.branch_prob);
    spec.seed = doc.value("seed", spec.seed);
  } catch (const json::exception& e) {
    throw_error(Errc::parse_error, e.what());
  }
  return spec;
}

std::string moe_config_to_json(const MoeConfig& cfg) {
  json out{{"n", cfg.experts},         {"k", cfg.active_per_example},
           {"b", cfg.batch},           {"data_dim", cfg.data_dim},
           {"hidden", cfg.hidden},     {"m", cfg.examples_per_expert}};
  return out.dump(2);
}

MoeConfig moe_config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw_error(Errc::parse_error, e.what());
  }
  MoeConfig cfg;
  try {
    cfg.experts = doc.at("n").get<std::int64_t>();
    cfg.active_per_example = doc.at("k").get<std::int64_t>();
    cfg.batch = doc.value("b", cfg.batch);
    cfg.data_dim = doc.value("data_dim", cfg.data_dim);
    cfg.hidden = doc.value("hidden", cfg.hidden);
    cfg.examples_per_expert = doc.value("m", cfg.examples_per_expert);
  } catch (const json::exception& e) {
    throw_error(Errc::parse_error, e.what());
  }
  cfg.check();
  return cfg;
}

}  // namespace dynbatch
