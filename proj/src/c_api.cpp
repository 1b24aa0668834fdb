// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynbatch/dynbatch.h"

#include <cstring>
#include <string>
#include <vector>

#include "dynbatch/executor.hpp"
#include "dynbatch/moe.hpp"
#include "dynbatch/program.hpp"
#include "dynbatch/rng.hpp"
#include "dynbatch/schedule.hpp"
#include "dynbatch/serialize.hpp"
#include "dynbatch/verify.hpp"
#include "dynbatch/workload.hpp"

struct db_batch {
  dynbatch::FunctionVocab vocab;
  std::vector<dynbatch::Program> programs;
  dynbatch::TensorBatch inputs;
};

struct db_schedule {
  dynbatch::Schedule schedule;
};

struct db_run {
  dynbatch::TensorBatch outputs;
  dynbatch::ExecutionTrace trace;
};

namespace {

thread_local std::string g_last_error;

db_status status_from(dynbatch::Errc code) {
  using dynbatch::Errc;
  switch (code) {
    case Errc::ok: return DB_OK;
    case Errc::invalid_argument: return DB_ERR_INVALID_ARG;
    case Errc::unknown_function: return DB_ERR_UNKNOWN_FUNCTION;
    case Errc::underfull_sequence: return DB_ERR_UNDERFULL_SEQUENCE;
    case Errc::overfull_sequence: return DB_ERR_OVERFULL_SEQUENCE;
    case Errc::invalid_program: return DB_ERR_INVALID_PROGRAM;
    case Errc::dependency_violation: return DB_ERR_DEPENDENCY_VIOLATION;
    case Errc::missing_operand: return DB_ERR_MISSING_OPERAND;
    case Errc::row_count_mismatch:
    case Errc::width_mismatch:
    case Errc::arity_mismatch:
    case Errc::k_too_large:
    case Errc::vocab_missing_arity: return DB_ERR_SHAPE_MISMATCH;
    case Errc::non_finite_value: return DB_ERR_NON_FINITE;
    case Errc::single_assignment_violation: return DB_ERR_INTERNAL;
    case Errc::parse_error: return DB_ERR_PARSE;
    case Errc::verification_failed: return DB_ERR_VERIFICATION_FAILED;
  }
  return DB_ERR_INTERNAL;
}

template <typename Fn>
db_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return DB_OK;
  } catch (const dynbatch::Error& e) {
    g_last_error = e.what();
    return status_from(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return DB_ERR_INTERNAL;
  }
}

db_status fail_invalid(const char* what) {
  g_last_error = what;
  return DB_ERR_INVALID_ARG;
}

char* copy_string(const std::string& text) {
  char* out = new char[text.size() + 1];
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* db_version(void) { return "0.1.0"; }

const char* db_last_error(void) { return g_last_error.c_str(); }

void db_string_free(char* text) { delete[] text; }

db_status db_batch_generate(const db_workload_opts* opts, db_batch** out) {
  if (!opts || !out) return fail_invalid("null argument");
  return guarded([&] {
    dynbatch::WorkloadSpec spec;
    switch (opts->kind) {
      case DB_WORKLOAD_BALANCED_TREE: spec.kind = dynbatch::WorkloadKind::balanced_tree; break;
      case DB_WORKLOAD_CHAIN_HEAVY: spec.kind = dynbatch::WorkloadKind::chain_heavy; break;
      case DB_WORKLOAD_RANDOM_DAG: spec.kind = dynbatch::WorkloadKind::random_dag; break;
      default: dynbatch::throw_error(dynbatch::Errc::invalid_argument, "unknown workload kind");
    }
    spec.b = opts->batch;
    spec.p = opts->vocab;
    spec.width = opts->width;
    spec.depth = opts->depth;
    spec.length = opts->length;
    spec.branch_prob = opts->branch_prob;
    spec.seed = opts->seed;
    dynbatch::GeneratedBatch generated = dynbatch::gen_batch(spec);
    *out = new db_batch{std::move(generated.vocab), std::move(generated.programs),
                        std::move(generated.inputs)};
  });
}

db_status db_batch_load_json(const char* text, int32_t width, uint64_t input_seed,
                             db_batch** out) {
  if (!text || !out) return fail_invalid("null argument");
  return guarded([&] {
    dynbatch::ProgramSet set = dynbatch::program_set_from_json(text, width);
    dynbatch::TensorBatch inputs = dynbatch::random_batch(
        static_cast<std::int64_t>(set.programs.size()), width, input_seed);
    *out = new db_batch{std::move(set.vocab), std::move(set.programs), std::move(inputs)};
  });
}

db_status db_batch_to_json(const db_batch* batch, char** out_text) {
  if (!batch || !out_text) return fail_invalid("null argument");
  return guarded([&] {
    *out_text = copy_string(dynbatch::program_set_to_json(batch->vocab, batch->programs));
  });
}

db_status db_batch_stats(const db_batch* batch, db_batch_stats_t* out) {
  if (!batch || !out) return fail_invalid("null argument");
  return guarded([&] {
    dynbatch::BatchStats stats = dynbatch::compute_batch_stats(batch->programs, batch->vocab);
    out->batch = stats.b;
    out->vocab = stats.p;
    out->width = batch->vocab.width();
    out->s_max = stats.s_max;
    out->d_max = stats.d_max;
    out->total_nodes = dynbatch::count_total_nodes(batch->programs);
    out->expensive_nodes = dynbatch::count_expensive_nodes(batch->programs, batch->vocab);
  });
}

void db_batch_free(db_batch* batch) { delete batch; }

db_status db_schedule_build(const db_batch* batch, db_strategy strategy, db_schedule** out) {
  if (!batch || !out) return fail_invalid("null argument");
  return guarded([&] {
    dynbatch::Strategy s;
    switch (strategy) {
      case DB_STRATEGY_NAIVE: s = dynbatch::Strategy::naive; break;
      case DB_STRATEGY_STANDARD: s = dynbatch::Strategy::standard; break;
      case DB_STRATEGY_IMPROVED: s = dynbatch::Strategy::improved; break;
      case DB_STRATEGY_ONLINE: s = dynbatch::Strategy::online; break;
      default: dynbatch::throw_error(dynbatch::Errc::invalid_argument, "unknown strategy");
    }
    *out = new db_schedule{dynbatch::build_schedule(s, batch->programs, batch->vocab)};
  });
}

db_status db_schedule_verify(const db_schedule* schedule, const db_batch* batch) {
  if (!schedule || !batch) return fail_invalid("null argument");
  return guarded([&] {
    dynbatch::ScheduleReport report =
        dynbatch::verify_schedule(schedule->schedule, batch->programs);
    if (!report.ok()) {
      dynbatch::throw_error(dynbatch::Errc::verification_failed, report.to_string());
    }
  });
}

int64_t db_schedule_step_count(const db_schedule* schedule) {
  return schedule ? static_cast<int64_t>(schedule->schedule.steps.size()) : -1;
}

db_status db_schedule_expensive_calls(const db_schedule* schedule, const db_batch* batch,
                                      int64_t* out) {
  if (!schedule || !batch || !out) return fail_invalid("null argument");
  return guarded(
      [&] { *out = dynbatch::count_expensive_calls(schedule->schedule, batch->vocab); });
}

db_status db_schedule_to_json(const db_schedule* schedule, char** out_text) {
  if (!schedule || !out_text) return fail_invalid("null argument");
  return guarded(
      [&] { *out_text = copy_string(dynbatch::schedule_to_json(schedule->schedule)); });
}

db_status db_schedule_inject_fault(db_schedule* schedule, const char* kind) {
  if (!schedule || !kind) return fail_invalid("null argument");
  return guarded([&] {
    auto& steps = schedule->schedule.steps;
    const std::string which = kind;
    if (which == "dependency-order") {
      if (steps.size() < 2) {
        dynbatch::throw_error(dynbatch::Errc::invalid_argument, "schedule has fewer than 2 steps");
      }
      std::swap(steps.front(), steps.back());
    } else if (which == "duplicate") {
      if (steps.empty() || steps.front().empty() || steps.front().front().members.empty()) {
        dynbatch::throw_error(dynbatch::Errc::invalid_argument, "schedule is empty");
      }
      steps.back().push_back(steps.front().front());
    } else {
      dynbatch::throw_error(dynbatch::Errc::invalid_argument,
                            "unknown fault kind '" + which + "'");
    }
  });
}

void db_schedule_free(db_schedule* schedule) { delete schedule; }

db_status db_execute(const db_batch* batch, const db_schedule* schedule, uint64_t module_seed,
                     db_run** out) {
  if (!batch || !schedule || !out) return fail_invalid("null argument");
  return guarded([&] {
    dynbatch::ExecResult result = dynbatch::execute(schedule->schedule, batch->programs,
                                                    batch->inputs, batch->vocab, module_seed);
    *out = new db_run{std::move(result.outputs), std::move(result.trace)};
  });
}

db_status db_run_outputs(const db_run* run, const double** data, int64_t* rows, int64_t* width) {
  if (!run || !data || !rows || !width) return fail_invalid("null argument");
  *data = run->outputs.data().data();
  *rows = run->outputs.rows();
  *width = run->outputs.width();
  return DB_OK;
}

int64_t db_run_expensive_calls(const db_run* run) {
  return run ? run->trace.expensive_calls : -1;
}

int64_t db_run_peak_group_rows(const db_run* run) {
  return run ? run->trace.peak_group_rows : -1;
}

double db_run_module_seconds(const db_run* run) {
  return run ? run->trace.module_seconds : -1.0;
}

double db_run_stacking_seconds(const db_run* run) {
  return run ? run->trace.stacking_seconds : -1.0;
}

double db_run_total_seconds(const db_run* run) {
  return run ? run->trace.total_seconds : -1.0;
}

db_status db_run_trace_json(const db_run* run, char** out_text) {
  if (!run || !out_text) return fail_invalid("null argument");
  return guarded([&] { *out_text = copy_string(dynbatch::trace_to_json(run->trace)); });
}

void db_run_free(db_run* run) { delete run; }

db_status db_moe_run(const db_moe_opts* opts, int32_t batched, db_run** out) {
  if (!opts || !out) return fail_invalid("null argument");
  return guarded([&] {
    dynbatch::MoeConfig cfg;
    cfg.experts = opts->experts;
    cfg.active_per_example = opts->active_per_example;
    cfg.batch = opts->batch;
    cfg.data_dim = opts->data_dim;
    cfg.hidden = opts->hidden;
    cfg.check();
    dynbatch::MoeWorkload workload = dynbatch::gen_moe_inputs(cfg, opts->seed);
    dynbatch::ExpertSet experts(cfg.experts, cfg.data_dim, cfg.hidden,
                                dynbatch::mix_seed(opts->seed, 0xe4be27ULL));
    dynbatch::GateAssignment gates =
        dynbatch::top_k_gate(workload.scores, cfg.active_per_example);
    dynbatch::MoeResult result = batched
                                     ? dynbatch::moe_forward_batched(workload.inputs, experts, gates)
                                     : dynbatch::moe_forward_naive(workload.inputs, experts, gates);
    *out = new db_run{std::move(result.outputs), std::move(result.trace)};
  });
}

db_status db_moe_memory_model(int64_t experts, int64_t active_per_example, int64_t hidden,
                              int64_t data_dim, double examples_per_expert,
                              db_memory_model_t* out) {
  if (!out) return fail_invalid("null argument");
  return guarded([&] {
    dynbatch::MoeConfig cfg;
    cfg.experts = experts;
    cfg.active_per_example = active_per_example;
    cfg.hidden = hidden;
    cfg.data_dim = data_dim;
    cfg.examples_per_expert = examples_per_expert;
    out->param_count = dynbatch::moe_param_count(cfg);
    out->activation_count = dynbatch::moe_activation_count(cfg);
    out->memory_ratio = dynbatch::moe_memory_ratio(cfg);
  });
}

db_status db_verify_run(const db_verify_opts* opts, db_log_fn log, void* user) {
  if (!opts) return fail_invalid("null argument");
  dynbatch::VerifyReport report;
  db_status status = guarded([&] {
    dynbatch::VerifyOptions options;
    options.seeds = opts->seeds;
    options.b = opts->batch;
    options.p = opts->vocab;
    options.length = opts->length;
    options.width = opts->width;
    options.base_seed = opts->seed;
    options.parallel = opts->parallel != 0;
    report = dynbatch::run_property_suite(options, [&](const std::string& line) {
      if (log) log(line.c_str(), user);
    });
  });
  if (status != DB_OK) return status;
  if (!report.ok()) {
    for (const std::string& failure : report.failures) {
      if (log) log(failure.c_str(), user);
    }
    g_last_error = std::to_string(report.failures.size()) + " verification failures";
    return DB_ERR_VERIFICATION_FAILED;
  }
  return DB_OK;
}

}  // extern "C"
