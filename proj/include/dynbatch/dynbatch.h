/* Copyright 2026 The dynbatch Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C API of the dynbatch engine. All state lives behind opaque handles;
 * every fallible call returns a db_status and leaves a human-readable
 * message in db_last_error() (thread-local) on failure.
 */

#ifndef DYNBATCH_DYNBATCH_H
#define DYNBATCH_DYNBATCH_H

#include <stdint.h>

#if defined(_WIN32)
#define DYNBATCH_API __declspec(dllexport)
#else
#define DYNBATCH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t db_status;

enum {
  DB_OK = 0,
  DB_ERR_INVALID_ARG = 1,
  DB_ERR_UNKNOWN_FUNCTION = 2,
  DB_ERR_UNDERFULL_SEQUENCE = 3,
  DB_ERR_OVERFULL_SEQUENCE = 4,
  DB_ERR_INVALID_PROGRAM = 5,
  DB_ERR_DEPENDENCY_VIOLATION = 6,
  DB_ERR_MISSING_OPERAND = 7,
  DB_ERR_SHAPE_MISMATCH = 8,
  DB_ERR_NON_FINITE = 9,
  DB_ERR_PARSE = 10,
  DB_ERR_VERIFICATION_FAILED = 11,
  DB_ERR_INTERNAL = 12
};

typedef enum {
  DB_STRATEGY_NAIVE = 0,
  DB_STRATEGY_STANDARD = 1,
  DB_STRATEGY_IMPROVED = 2,
  DB_STRATEGY_ONLINE = 3
} db_strategy;

typedef enum {
  DB_WORKLOAD_BALANCED_TREE = 0,
  DB_WORKLOAD_CHAIN_HEAVY = 1,
  DB_WORKLOAD_RANDOM_DAG = 2
} db_workload_kind;

/* A batch bundles the function vocabulary, b per-example programs and b
 * input feature rows. */
typedef struct db_batch db_batch;
typedef struct db_schedule db_schedule;
/* One execution: per-example root outputs plus the trace. */
typedef struct db_run db_run;

typedef struct {
  db_workload_kind kind;
  int64_t batch;      /* b */
  int32_t vocab;      /* p */
  int32_t width;      /* feature width */
  int32_t depth;      /* balanced tree levels */
  int32_t length;     /* chain / dag max node count */
  double branch_prob; /* chain: branch rate; dag: leaf share rate */
  uint64_t seed;
} db_workload_opts;

typedef struct {
  int64_t batch;
  int64_t vocab;
  int64_t width;
  int64_t s_max;           /* longest program */
  int64_t d_max;           /* largest max-root-distance label */
  int64_t total_nodes;
  int64_t expensive_nodes; /* the exact naive call count */
} db_batch_stats_t;

typedef struct {
  int64_t experts;            /* n */
  int64_t active_per_example; /* k */
  int64_t batch;              /* b */
  int64_t data_dim;
  int64_t hidden;
  uint64_t seed;
} db_moe_opts;

typedef struct {
  int64_t param_count;
  double activation_count;
  double memory_ratio;
} db_memory_model_t;

typedef struct {
  int32_t seeds;
  int64_t batch;
  int32_t vocab;
  int32_t length;
  int32_t width;
  uint64_t seed;
  int32_t parallel;
} db_verify_opts;

typedef void (*db_log_fn)(const char* line, void* user);

DYNBATCH_API const char* db_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
DYNBATCH_API const char* db_last_error(void);

/* Frees strings returned through char** out-params. */
DYNBATCH_API void db_string_free(char* text);

/* ---- batches ---- */

DYNBATCH_API db_status db_batch_generate(const db_workload_opts* opts, db_batch** out);

/* Parses {"vocab": [{"id","arity","cost"}...], "programs": [[id,...],...]};
 * programs are prefix sequences. Inputs are seeded from input_seed. */
DYNBATCH_API db_status db_batch_load_json(const char* text, int32_t width, uint64_t input_seed,
                                          db_batch** out);
DYNBATCH_API db_status db_batch_to_json(const db_batch* batch, char** out_text);
DYNBATCH_API db_status db_batch_stats(const db_batch* batch, db_batch_stats_t* out);
DYNBATCH_API void db_batch_free(db_batch* batch);

/* ---- schedules ---- */

DYNBATCH_API db_status db_schedule_build(const db_batch* batch, db_strategy strategy,
                                         db_schedule** out);
/* DB_OK when complete and dependency-ordered; DB_ERR_VERIFICATION_FAILED
 * with the violation list in db_last_error() otherwise. */
DYNBATCH_API db_status db_schedule_verify(const db_schedule* schedule, const db_batch* batch);
DYNBATCH_API int64_t db_schedule_step_count(const db_schedule* schedule);
DYNBATCH_API db_status db_schedule_expensive_calls(const db_schedule* schedule,
                                                   const db_batch* batch, int64_t* out);
DYNBATCH_API db_status db_schedule_to_json(const db_schedule* schedule, char** out_text);

/* Corrupts a schedule in a prescribed way so callers can exercise the
 * verifier's failure path. kind: "dependency-order" swaps the first two
 * steps, "duplicate" re-executes an already scheduled node. */
DYNBATCH_API db_status db_schedule_inject_fault(db_schedule* schedule, const char* kind);
DYNBATCH_API void db_schedule_free(db_schedule* schedule);

/* ---- execution ---- */

DYNBATCH_API db_status db_execute(const db_batch* batch, const db_schedule* schedule,
                                  uint64_t module_seed, db_run** out);

/* Borrowing view of the b x width root outputs; valid until db_run_free. */
DYNBATCH_API db_status db_run_outputs(const db_run* run, const double** data, int64_t* rows,
                                      int64_t* width);
DYNBATCH_API int64_t db_run_expensive_calls(const db_run* run);
DYNBATCH_API int64_t db_run_peak_group_rows(const db_run* run);
DYNBATCH_API double db_run_module_seconds(const db_run* run);
DYNBATCH_API double db_run_stacking_seconds(const db_run* run);
DYNBATCH_API double db_run_total_seconds(const db_run* run);
DYNBATCH_API db_status db_run_trace_json(const db_run* run, char** out_text);
DYNBATCH_API void db_run_free(db_run* run);

/* ---- mixture of experts ---- */

/* Runs one MOE layer forward pass on seeded inputs and top-k gates.
 * batched = 0 loops over the k*b assignments (k*b expert calls); batched = 1
 * groups them by expert (at most n calls). Outputs/trace via db_run_*. */
DYNBATCH_API db_status db_moe_run(const db_moe_opts* opts, int32_t batched, db_run** out);

DYNBATCH_API db_status db_moe_memory_model(int64_t experts, int64_t active_per_example,
                                           int64_t hidden, int64_t data_dim,
                                           double examples_per_expert, db_memory_model_t* out);

/* ---- verification ---- */

/* Runs the invariant suite over opts->seeds seeded batches. Progress and
 * failures stream through log; returns DB_ERR_VERIFICATION_FAILED if any
 * check failed. */
DYNBATCH_API db_status db_verify_run(const db_verify_opts* opts, db_log_fn log, void* user);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DYNBATCH_DYNBATCH_H */
