// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0
//
// Benchmark and verification front end. Talks to the engine exclusively
// through the C API in dynbatch/dynbatch.h.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynbatch/dynbatch.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerification = 2;

[[noreturn]] void die(int code, const std::string& message) {
  std::cerr << "error: " << message << "\n";
  std::exit(code);
}

void check(db_status status, const std::string& what) {
  if (status != DB_OK) {
    die(status == DB_ERR_INVALID_ARG ? kExitUsage : kExitVerification,
        what + ": " + db_last_error());
  }
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct OwnedString {
  char* text = nullptr;
  ~OwnedString() { db_string_free(text); }
};

struct RepStats {
  std::vector<double> module_s;
  std::vector<double> stacking_s;
  std::vector<double> total_s;
  int64_t calls = 0;
  int64_t peak_rows = 0;
  std::string last_trace_json;
};

// Repetitions are interleaved across all schedules (rep-major order) so that
// environment noise lands on every strategy alike; an initial interleaved
// sweep warms caches and is discarded. One rep aggregates `inner` executions
// so each median sample is long enough to ride out scheduler jitter. Timings
// come from the engine's own trace, so handle churn does not pollute them.
std::vector<RepStats> run_interleaved_reps(const db_batch* batch,
                                           const std::vector<db_schedule*>& schedules,
                                           uint64_t module_seed, int reps, int inner,
                                           bool want_trace) {
  std::vector<RepStats> stats(schedules.size());
  for (int rep = 0; rep <= reps; ++rep) {
    for (size_t si = 0; si < schedules.size(); ++si) {
      double module_s = 0.0, stacking_s = 0.0, total_s = 0.0;
      for (int pass = 0; pass < (rep == 0 ? 1 : inner); ++pass) {
        db_run* run = nullptr;
        check(db_execute(batch, schedules[si], module_seed, &run), "execute");
        module_s += db_run_module_seconds(run);
        stacking_s += db_run_stacking_seconds(run);
        total_s += db_run_total_seconds(run);
        stats[si].calls = db_run_expensive_calls(run);
        stats[si].peak_rows = db_run_peak_group_rows(run);
        if (want_trace && rep == reps && pass + 1 == inner) {
          OwnedString trace;
          check(db_run_trace_json(run, &trace.text), "trace");
          stats[si].last_trace_json = trace.text;
        }
        db_run_free(run);
      }
      if (rep > 0) {
        stats[si].module_s.push_back(module_s);
        stats[si].stacking_s.push_back(stacking_s);
        stats[si].total_s.push_back(total_s);
      }
    }
  }
  return stats;
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) die(kExitUsage, "cannot open output file '" + path + "'");
  return file;
}

struct BenchIepArgs {
  std::vector<int64_t> batch_sizes{1, 8, 64, 512};
  int32_t vocab = 40;
  int32_t width = 64;
  int32_t length = 16;
  int32_t depth = 5;
  double branch_prob = 0.1;
  std::string shape = "chain-heavy";
  std::vector<std::string> schedulers{"naive", "standard", "improved"};
  int reps = 5;
  int inner = 1;
  uint64_t seed = 0;
  std::string out_path;
  std::string trace_path;
};

db_strategy strategy_from(const std::string& name) {
  if (name == "naive") return DB_STRATEGY_NAIVE;
  if (name == "standard") return DB_STRATEGY_STANDARD;
  if (name == "improved") return DB_STRATEGY_IMPROVED;
  if (name == "online") return DB_STRATEGY_ONLINE;
  die(kExitUsage, "unknown scheduler '" + name + "'");
}

db_workload_kind shape_from(const std::string& name) {
  if (name == "balanced-tree") return DB_WORKLOAD_BALANCED_TREE;
  if (name == "chain-heavy") return DB_WORKLOAD_CHAIN_HEAVY;
  if (name == "random-dag") return DB_WORKLOAD_RANDOM_DAG;
  die(kExitUsage, "unknown shape '" + name + "'");
}

// Static call-count guarantees checked on every benchmark run: naive equals
// the expensive-node census, standard stays under min(p,b)*s_max, improved
// under p*(d_max+1), online under p*d_max.
void check_call_bounds(const std::string& scheduler, int64_t calls,
                       const db_batch_stats_t& stats) {
  bool ok = true;
  std::string bound;
  if (scheduler == "naive") {
    ok = calls == stats.expensive_nodes;
    bound = "census " + std::to_string(stats.expensive_nodes);
  } else if (scheduler == "standard") {
    ok = calls <= std::min(stats.vocab, stats.batch) * stats.s_max;
    bound = "min(p,b)*s_max";
  } else if (scheduler == "improved") {
    ok = calls <= stats.vocab * (stats.d_max + 1);
    bound = "p*(d_max+1)";
  } else if (scheduler == "online") {
    ok = calls <= stats.vocab * stats.d_max;
    bound = "p*d_max";
  }
  if (!ok) {
    die(kExitVerification, scheduler + " made " + std::to_string(calls) +
                               " expensive calls, violating bound " + bound);
  }
}

int run_bench_iep(const BenchIepArgs& args) {
  std::ofstream file;
  std::ostream& csv = open_output(file, args.out_path);
  csv << "scheduler,b,p,s_max,d_max,calls,module_ms,stack_ms,total_ms,speedup\n";

  std::vector<std::string> traces;
  // rows[scheduler][bi]; all strategies for one batch size are measured
  // back to back against the same naive reference runs.
  std::vector<std::vector<std::string>> rows(args.schedulers.size());

  for (size_t bi = 0; bi < args.batch_sizes.size(); ++bi) {
    db_workload_opts opts{};
    opts.kind = shape_from(args.shape);
    opts.batch = args.batch_sizes[bi];
    opts.vocab = args.vocab;
    opts.width = args.width;
    opts.depth = args.depth;
    opts.length = args.length;
    opts.branch_prob = args.branch_prob;
    opts.seed = args.seed;

    db_batch* batch = nullptr;
    check(db_batch_generate(&opts, &batch), "generate workload");
    db_batch_stats_t stats{};
    check(db_batch_stats(batch, &stats), "batch stats");

    // Schedule 0 is always naive: it is the speedup reference (and the naive
    // row, when requested).
    std::vector<db_schedule*> schedules;
    db_schedule* naive = nullptr;
    check(db_schedule_build(batch, DB_STRATEGY_NAIVE, &naive), "build naive schedule");
    schedules.push_back(naive);
    for (const std::string& scheduler : args.schedulers) {
      db_strategy strategy = strategy_from(scheduler);
      if (strategy == DB_STRATEGY_NAIVE) {
        schedules.push_back(naive);
        continue;
      }
      db_schedule* schedule = nullptr;
      check(db_schedule_build(batch, strategy, &schedule), "build schedule");
      check(db_schedule_verify(schedule, batch), "verify schedule");
      schedules.push_back(schedule);
    }

    std::vector<RepStats> all_stats = run_interleaved_reps(batch, schedules, args.seed, args.reps,
                                                           args.inner, !args.trace_path.empty());
    double naive_module = median(all_stats[0].module_s);

    for (size_t si = 0; si < args.schedulers.size(); ++si) {
      const std::string& scheduler = args.schedulers[si];
      const RepStats& reps = all_stats[si + 1];
      check_call_bounds(scheduler, reps.calls, stats);

      double module_ms = median(reps.module_s) * 1e3 / args.inner;
      double speedup = naive_module / median(reps.module_s);
      char row[256];
      std::snprintf(row, sizeof(row),
                    "%s,%" PRId64 ",%" PRId64 ",%" PRId64 ",%" PRId64 ",%" PRId64
                    ",%.6f,%.6f,%.6f,%.4f\n",
                    scheduler.c_str(), stats.batch, stats.vocab, stats.s_max, stats.d_max,
                    reps.calls, module_ms, median(reps.stacking_s) * 1e3 / args.inner,
                    median(reps.total_s) * 1e3 / args.inner, speedup);
      rows[si].push_back(row);

      if (!args.trace_path.empty()) {
        std::vector<double> sorted = reps.module_s;
        std::sort(sorted.begin(), sorted.end());
        char dispersion[160];
        std::snprintf(dispersion, sizeof(dispersion),
                      "\"module_ms_min\": %.6f, \"module_ms_median\": %.6f, "
                      "\"module_ms_max\": %.6f",
                      sorted.front() * 1e3 / args.inner, module_ms,
                      sorted.back() * 1e3 / args.inner);
        traces.push_back("{\"scheduler\": \"" + scheduler +
                         "\", \"b\": " + std::to_string(stats.batch) + ", " + dispersion +
                         ", \"trace\": " + reps.last_trace_json + "}");
      }
    }
    for (size_t si = 1; si < schedules.size(); ++si) {
      if (schedules[si] != naive) db_schedule_free(schedules[si]);
    }
    db_schedule_free(naive);
    db_batch_free(batch);
  }

  for (const auto& scheduler_rows : rows) {
    for (const std::string& row : scheduler_rows) csv << row;
  }

  if (!args.trace_path.empty()) {
    std::ofstream trace_file(args.trace_path);
    if (!trace_file) die(kExitUsage, "cannot open trace file '" + args.trace_path + "'");
    trace_file << "[\n";
    for (size_t i = 0; i < traces.size(); ++i) {
      trace_file << traces[i] << (i + 1 < traces.size() ? ",\n" : "\n");
    }
    trace_file << "]\n";
  }
  return kExitOk;
}

struct BenchMoeArgs {
  std::vector<int64_t> experts{16, 64, 128, 256};
  int64_t k = 4;
  int64_t batch = 256;
  int64_t data_dim = 64;
  int64_t hidden = 64;
  int reps = 5;
  int inner = 1;
  uint64_t seed = 0;
  std::string out_path;
};

int run_bench_moe(const BenchMoeArgs& args) {
  std::ofstream file;
  std::ostream& csv = open_output(file, args.out_path);
  csv << "impl,n,k,b,data_dim,hidden,calls,expert_ms,stack_ms,total_ms,speedup,"
         "speedup_per_call\n";

  for (int64_t n : args.experts) {
    db_moe_opts opts{};
    opts.experts = n;
    opts.active_per_example = args.k;
    opts.batch = args.batch;
    opts.data_dim = args.data_dim;
    opts.hidden = args.hidden;
    opts.seed = args.seed;

    struct ImplStats {
      std::vector<double> expert_s, stack_s, total_s;
      int64_t calls = 0;
    };
    ImplStats per_impl[2];
    double max_rel_diff = 0.0;
    std::vector<double> reference;

    // Interleave naive/batched reps so noise lands on both alike; the first
    // sweep warms caches and is discarded. One rep aggregates `inner` passes.
    for (int rep = 0; rep <= args.reps; ++rep) {
      for (int batched = 0; batched < 2; ++batched) {
        double expert_s = 0.0, stack_s = 0.0, total_s = 0.0;
        for (int pass = 0; pass < (rep == 0 ? 1 : args.inner); ++pass) {
          db_run* run = nullptr;
          check(db_moe_run(&opts, batched, &run), "moe forward");
          expert_s += db_run_module_seconds(run);
          stack_s += db_run_stacking_seconds(run);
          total_s += db_run_total_seconds(run);
          per_impl[batched].calls = db_run_expensive_calls(run);
          if (rep == args.reps && pass + 1 == args.inner) {
            const double* data = nullptr;
            int64_t rows = 0, width = 0;
            check(db_run_outputs(run, &data, &rows, &width), "moe outputs");
            if (batched == 0) {
              reference.assign(data, data + rows * width);
            } else {
              for (int64_t i = 0; i < rows * width; ++i) {
                double denom = std::max({std::abs(reference[i]), std::abs(data[i]), 1e-300});
                max_rel_diff = std::max(max_rel_diff, std::abs(reference[i] - data[i]) / denom);
              }
            }
          }
          db_run_free(run);
        }
        if (rep > 0) {
          per_impl[batched].expert_s.push_back(expert_s);
          per_impl[batched].stack_s.push_back(stack_s);
          per_impl[batched].total_s.push_back(total_s);
        }
      }
    }

    if (max_rel_diff > 1e-9) {
      die(kExitVerification, "batched MOE outputs diverge from naive (rel " +
                                 std::to_string(max_rel_diff) + ") at n=" + std::to_string(n));
    }

    double naive_med = median(per_impl[0].expert_s);
    for (int batched = 0; batched < 2; ++batched) {
      const ImplStats& s = per_impl[batched];
      double expert_med = median(s.expert_s);
      double speedup = naive_med / expert_med;
      // Per-call normalization: average time per expert call, naive over impl.
      double per_call =
          (naive_med / static_cast<double>(per_impl[0].calls)) /
          (expert_med / static_cast<double>(s.calls));
      char row[256];
      std::snprintf(row, sizeof(row),
                    "%s,%" PRId64 ",%" PRId64 ",%" PRId64 ",%" PRId64 ",%" PRId64 ",%" PRId64
                    ",%.6f,%.6f,%.6f,%.4f,%.4f\n",
                    batched ? "batched" : "naive", n, args.k, args.batch, args.data_dim,
                    args.hidden, s.calls, expert_med * 1e3 / args.inner,
                    median(s.stack_s) * 1e3 / args.inner, median(s.total_s) * 1e3 / args.inner,
                    speedup, per_call);
      csv << row;
    }
  }
  return kExitOk;
}

struct VerifyArgs {
  int32_t seeds = 100;
  int64_t batch = 8;
  int32_t vocab = 12;
  int32_t length = 12;
  int32_t width = 8;
  uint64_t seed = 0;
  bool parallel = false;
  std::string inject_fault;
};

int run_verify(const VerifyArgs& args) {
  if (!args.inject_fault.empty()) {
    db_workload_opts opts{};
    opts.kind = DB_WORKLOAD_CHAIN_HEAVY;
    opts.batch = 4;
    opts.vocab = 8;
    opts.width = 4;
    opts.length = 6;
    opts.branch_prob = 0.0;
    opts.seed = args.seed;
    db_batch* batch = nullptr;
    check(db_batch_generate(&opts, &batch), "generate workload");
    db_schedule* schedule = nullptr;
    check(db_schedule_build(batch, DB_STRATEGY_STANDARD, &schedule), "build schedule");
    check(db_schedule_inject_fault(schedule, args.inject_fault.c_str()), "inject fault");
    db_status status = db_schedule_verify(schedule, batch);
    db_schedule_free(schedule);
    db_batch_free(batch);
    if (status == DB_OK) {
      std::cerr << "injected fault went undetected\n";
      return kExitVerification;
    }
    std::cout << "fault detected: " << db_last_error() << "\n";
    return kExitVerification;
  }

  if (args.seeds == 0) {
    std::cout << "warning: --seeds 0, nothing checked (vacuous pass)\n";
    return kExitOk;
  }

  db_verify_opts opts{};
  opts.seeds = args.seeds;
  opts.batch = args.batch;
  opts.vocab = args.vocab;
  opts.length = args.length;
  opts.width = args.width;
  opts.seed = args.seed;
  opts.parallel = args.parallel ? 1 : 0;
  db_status status = db_verify_run(
      &opts, [](const char* line, void*) { std::cout << line << "\n"; }, nullptr);
  if (status != DB_OK) {
    std::cerr << "verification failed: " << db_last_error() << "\n";
    return kExitVerification;
  }
  std::cout << "all invariants hold over " << args.seeds << " seeds\n";
  return kExitOk;
}

struct MemoryModelArgs {
  std::vector<int64_t> experts{10000};
  int64_t k = 100;
  int64_t hidden = 2048;
  int64_t data_dim = 2048;
  double m = 1e6;
};

int run_memory_model(const MemoryModelArgs& args) {
  std::printf("%-10s %-8s %-8s %-10s %-12s %-16s %-18s %-10s\n", "n", "k", "hidden", "data_dim",
              "m", "params", "activations", "ratio");
  for (int64_t n : args.experts) {
    db_memory_model_t model{};
    check(db_moe_memory_model(n, args.k, args.hidden, args.data_dim, args.m, &model),
          "memory model");
    std::printf("%-10" PRId64 " %-8" PRId64 " %-8" PRId64 " %-10" PRId64
                " %-12g %-16" PRId64 " %-18g %-10.4f\n",
                n, args.k, args.hidden, args.data_dim, args.m, model.param_count,
                model.activation_count, model.memory_ratio);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic-batching scheduler benchmark harness (engine " +
               std::string(db_version()) + ")"};
  app.require_subcommand(1);

  BenchIepArgs iep;
  CLI::App* bench_iep = app.add_subcommand(
      "bench-iep", "Sweep schedulers over program-graph workloads, emit CSV");
  bench_iep->add_option("--b", iep.batch_sizes, "batch sizes to sweep")->delimiter(',');
  bench_iep->add_option("--p", iep.vocab, "function vocabulary size");
  bench_iep->add_option("--width", iep.width, "feature width");
  bench_iep->add_option("--s", iep.length, "max program length (chain/dag shapes)");
  bench_iep->add_option("--depth", iep.depth, "tree depth (balanced-tree shape)");
  bench_iep->add_option("--branch-prob", iep.branch_prob, "branch probability");
  bench_iep->add_option("--shape", iep.shape, "balanced-tree | chain-heavy | random-dag");
  bench_iep->add_option("--schedulers", iep.schedulers, "naive,standard,improved,online")
      ->delimiter(',');
  bench_iep->add_option("--reps", iep.reps, "timed repetitions per row")
      ->check(CLI::PositiveNumber);
  bench_iep->add_option("--inner", iep.inner, "executions aggregated into one repetition")
      ->check(CLI::PositiveNumber);
  bench_iep->add_option("--seed", iep.seed, "base seed")->envname("DYNBATCH_SEED");
  bench_iep->add_option("--out", iep.out_path, "CSV path ('-' for stdout)");
  bench_iep->add_option("--trace", iep.trace_path, "dump per-row execution traces (JSON)");

  BenchMoeArgs moe;
  CLI::App* bench_moe = app.add_subcommand(
      "bench-moe", "Sweep expert counts in a mixture-of-experts layer, emit CSV");
  bench_moe->add_option("--n", moe.experts, "expert counts to sweep")->delimiter(',');
  bench_moe->add_option("--k", moe.k, "experts per example");
  bench_moe->add_option("--b", moe.batch, "batch size");
  bench_moe->add_option("--data-dim", moe.data_dim, "input/output width");
  bench_moe->add_option("--hidden", moe.hidden, "expert hidden width");
  bench_moe->add_option("--reps", moe.reps, "timed repetitions per row")
      ->check(CLI::PositiveNumber);
  bench_moe->add_option("--inner", moe.inner, "forward passes aggregated into one repetition")
      ->check(CLI::PositiveNumber);
  bench_moe->add_option("--seed", moe.seed, "base seed")->envname("DYNBATCH_SEED");
  bench_moe->add_option("--out", moe.out_path, "CSV path ('-' for stdout)");

  VerifyArgs verify;
  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "Run the schedule/executor invariant suite over seeded batches");
  verify_cmd->add_option("--seeds", verify.seeds, "number of seeded cases")
      ->check(CLI::NonNegativeNumber);
  verify_cmd->add_option("--b", verify.batch, "batch size per case");
  verify_cmd->add_option("--p", verify.vocab, "vocabulary size");
  verify_cmd->add_option("--s", verify.length, "max program length");
  verify_cmd->add_option("--width", verify.width, "feature width");
  verify_cmd->add_option("--seed", verify.seed, "base seed")->envname("DYNBATCH_SEED");
  verify_cmd->add_flag("--parallel", verify.parallel, "check seeds on worker threads");
  verify_cmd->add_option("--inject-fault", verify.inject_fault,
                         "corrupt a schedule first (dependency-order | duplicate)");

  MemoryModelArgs memory;
  CLI::App* memory_cmd = app.add_subcommand(
      "memory-model", "Parameter/activation memory table for expert pools");
  memory_cmd->add_option("--n", memory.experts, "expert counts")->delimiter(',');
  memory_cmd->add_option("--k", memory.k, "experts per example");
  memory_cmd->add_option("--hidden", memory.hidden, "expert hidden width");
  memory_cmd->add_option("--data-dim", memory.data_dim, "data width");
  memory_cmd->add_option("--m", memory.m, "examples per expert");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (bench_iep->parsed()) return run_bench_iep(iep);
  if (bench_moe->parsed()) return run_bench_moe(moe);
  if (verify_cmd->parsed()) return run_verify(verify);
  if (memory_cmd->parsed()) return run_memory_model(memory);
  return kExitUsage;
}
