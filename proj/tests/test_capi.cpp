// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exercises the shared-library surface exactly as an external client would:
// through dynbatch/dynbatch.h only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "dynbatch/dynbatch.h"

namespace {

db_workload_opts chain_opts(int64_t b, uint64_t seed) {
  db_workload_opts opts{};
  opts.kind = DB_WORKLOAD_CHAIN_HEAVY;
  opts.batch = b;
  opts.vocab = 10;
  opts.width = 8;
  opts.depth = 4;
  opts.length = 10;
  opts.branch_prob = 0.2;
  opts.seed = seed;
  return opts;
}

}  // namespace

TEST_CASE("version and null-argument handling") {
  CHECK(db_version() != nullptr);
  CHECK(db_batch_generate(nullptr, nullptr) == DB_ERR_INVALID_ARG);
  CHECK(std::string(db_last_error()).size() > 0);
  CHECK(db_schedule_step_count(nullptr) == -1);
  CHECK(db_run_expensive_calls(nullptr) == -1);
}

TEST_CASE("generate, schedule, verify, execute through handles") {
  db_workload_opts opts = chain_opts(16, 5);
  db_batch* batch = nullptr;
  REQUIRE(db_batch_generate(&opts, &batch) == DB_OK);

  db_batch_stats_t stats{};
  REQUIRE(db_batch_stats(batch, &stats) == DB_OK);
  CHECK(stats.batch == 16);
  CHECK(stats.vocab == 10);
  CHECK(stats.width == 8);
  CHECK(stats.d_max < stats.s_max);
  CHECK(stats.expensive_nodes > 0);
  CHECK(stats.expensive_nodes < stats.total_nodes);

  int64_t reference_calls = -1;
  const double* reference = nullptr;
  std::vector<double> reference_copy;

  for (db_strategy strategy :
       {DB_STRATEGY_NAIVE, DB_STRATEGY_STANDARD, DB_STRATEGY_IMPROVED, DB_STRATEGY_ONLINE}) {
    db_schedule* schedule = nullptr;
    REQUIRE(db_schedule_build(batch, strategy, &schedule) == DB_OK);
    CHECK(db_schedule_verify(schedule, batch) == DB_OK);
    CHECK(db_schedule_step_count(schedule) > 0);

    int64_t calls = 0;
    REQUIRE(db_schedule_expensive_calls(schedule, batch, &calls) == DB_OK);
    if (strategy == DB_STRATEGY_NAIVE) {
      CHECK(calls == stats.expensive_nodes);
      reference_calls = calls;
    } else {
      CHECK(calls <= reference_calls);
    }

    db_run* run = nullptr;
    REQUIRE(db_execute(batch, schedule, 42, &run) == DB_OK);
    CHECK(db_run_expensive_calls(run) == calls);
    CHECK(db_run_module_seconds(run) >= 0.0);
    CHECK(db_run_total_seconds(run) >= db_run_module_seconds(run));

    int64_t rows = 0, width = 0;
    REQUIRE(db_run_outputs(run, &reference, &rows, &width) == DB_OK);
    CHECK(rows == 16);
    CHECK(width == 8);
    if (strategy == DB_STRATEGY_NAIVE) {
      reference_copy.assign(reference, reference + rows * width);
    } else {
      for (int64_t i = 0; i < rows * width; ++i) {
        CHECK(reference[i] == reference_copy[static_cast<size_t>(i)]);
      }
    }

    char* trace = nullptr;
    REQUIRE(db_run_trace_json(run, &trace) == DB_OK);
    CHECK(std::string(trace).find("expensive_calls") != std::string::npos);
    db_string_free(trace);

    db_run_free(run);
    db_schedule_free(schedule);
  }
  db_batch_free(batch);
}

TEST_CASE("schedule JSON dump and batch JSON round trip") {
  db_workload_opts opts = chain_opts(4, 9);
  db_batch* batch = nullptr;
  REQUIRE(db_batch_generate(&opts, &batch) == DB_OK);

  char* text = nullptr;
  REQUIRE(db_batch_to_json(batch, &text) == DB_OK);
  db_batch* reloaded = nullptr;
  REQUIRE(db_batch_load_json(text, 8, 1, &reloaded) == DB_OK);

  db_batch_stats_t a{}, b{};
  REQUIRE(db_batch_stats(batch, &a) == DB_OK);
  REQUIRE(db_batch_stats(reloaded, &b) == DB_OK);
  CHECK(a.total_nodes == b.total_nodes);
  CHECK(a.expensive_nodes == b.expensive_nodes);
  CHECK(a.s_max == b.s_max);
  CHECK(a.d_max == b.d_max);
  db_string_free(text);

  db_schedule* schedule = nullptr;
  REQUIRE(db_schedule_build(reloaded, DB_STRATEGY_STANDARD, &schedule) == DB_OK);
  char* dump = nullptr;
  REQUIRE(db_schedule_to_json(schedule, &dump) == DB_OK);
  CHECK(std::string(dump).find("\"strategy\": \"standard\"") != std::string::npos);
  CHECK(std::string(dump).find("members") != std::string::npos);
  db_string_free(dump);
  db_schedule_free(schedule);
  db_batch_free(reloaded);
  db_batch_free(batch);
}

TEST_CASE("malformed JSON yields a parse error with a message") {
  db_batch* batch = nullptr;
  CHECK(db_batch_load_json("{broken", 8, 1, &batch) == DB_ERR_PARSE);
  CHECK(std::string(db_last_error()).size() > 0);
  CHECK(batch == nullptr);
}

TEST_CASE("fault injection flips verification and names the violation") {
  db_workload_opts opts = chain_opts(4, 2);
  opts.branch_prob = 0.0;
  db_batch* batch = nullptr;
  REQUIRE(db_batch_generate(&opts, &batch) == DB_OK);
  db_schedule* schedule = nullptr;
  REQUIRE(db_schedule_build(batch, DB_STRATEGY_STANDARD, &schedule) == DB_OK);
  REQUIRE(db_schedule_verify(schedule, batch) == DB_OK);

  REQUIRE(db_schedule_inject_fault(schedule, "dependency-order") == DB_OK);
  CHECK(db_schedule_verify(schedule, batch) == DB_ERR_VERIFICATION_FAILED);
  CHECK(std::string(db_last_error()).find("DependencyOrderViolation") != std::string::npos);
  db_schedule_free(schedule);

  db_schedule* second = nullptr;
  REQUIRE(db_schedule_build(batch, DB_STRATEGY_STANDARD, &second) == DB_OK);
  REQUIRE(db_schedule_inject_fault(second, "duplicate") == DB_OK);
  CHECK(db_schedule_verify(second, batch) == DB_ERR_VERIFICATION_FAILED);
  CHECK(std::string(db_last_error()).find("DuplicateExecution") != std::string::npos);
  CHECK(db_schedule_inject_fault(second, "nonsense") == DB_ERR_INVALID_ARG);
  db_schedule_free(second);
  db_batch_free(batch);
}

TEST_CASE("moe runs agree between naive and batched and respect call counts") {
  db_moe_opts opts{};
  opts.experts = 32;
  opts.active_per_example = 4;
  opts.batch = 64;
  opts.data_dim = 8;
  opts.hidden = 8;
  opts.seed = 7;

  db_run* naive = nullptr;
  db_run* batched = nullptr;
  REQUIRE(db_moe_run(&opts, 0, &naive) == DB_OK);
  REQUIRE(db_moe_run(&opts, 1, &batched) == DB_OK);
  CHECK(db_run_expensive_calls(naive) == 256);
  CHECK(db_run_expensive_calls(batched) <= 32);

  const double *a = nullptr, *b = nullptr;
  int64_t rows = 0, width = 0, rows2 = 0, width2 = 0;
  REQUIRE(db_run_outputs(naive, &a, &rows, &width) == DB_OK);
  REQUIRE(db_run_outputs(batched, &b, &rows2, &width2) == DB_OK);
  REQUIRE(rows == rows2);
  REQUIRE(width == width2);
  for (int64_t i = 0; i < rows * width; ++i) {
    double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-300});
    CHECK(std::abs(a[i] - b[i]) / denom <= 1e-9);
  }
  db_run_free(naive);
  db_run_free(batched);

  db_moe_opts bad = opts;
  bad.active_per_example = 64;  // k > n
  db_run* run = nullptr;
  CHECK(db_moe_run(&bad, 0, &run) == DB_ERR_INVALID_ARG);
}

TEST_CASE("memory model through the C API") {
  db_memory_model_t model{};
  REQUIRE(db_moe_memory_model(10000, 100, 2048, 2048, 1e6, &model) == DB_OK);
  CHECK(model.param_count == 83886080000LL);
  CHECK(std::abs(model.memory_ratio - 7.3) <= 0.05);
  CHECK(model.activation_count == doctest::Approx(6.144e11));

  db_memory_model_t doubled{};
  REQUIRE(db_moe_memory_model(20000, 100, 2048, 2048, 1e6, &doubled) == DB_OK);
  CHECK(doubled.memory_ratio == model.memory_ratio);

  CHECK(db_moe_memory_model(0, 1, 1, 1, 0.0, &model) == DB_ERR_INVALID_ARG);
}

TEST_CASE("verification entry point runs and reports") {
  db_verify_opts opts{};
  opts.seeds = 6;
  opts.batch = 6;
  opts.vocab = 9;
  opts.length = 9;
  opts.width = 6;
  opts.seed = 0;
  opts.parallel = 0;

  int lines = 0;
  auto log = [](const char*, void* user) { ++*static_cast<int*>(user); };
  CHECK(db_verify_run(&opts, log, &lines) == DB_OK);

  opts.parallel = 1;
  opts.seeds = 8;
  CHECK(db_verify_run(&opts, log, &lines) == DB_OK);
}
