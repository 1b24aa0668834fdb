// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dynbatch/executor.hpp"
#include "dynbatch/moe.hpp"
#include "dynbatch/rng.hpp"
#include "dynbatch/schedule.hpp"
#include "dynbatch/verify.hpp"
#include "dynbatch/workload.hpp"

using namespace dynbatch;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name, const std::function<std::string()>& body) {
  std::string detail;
  bool ok = false;
  try {
    detail = body();
    ok = true;
  } catch (const std::exception& e) {
    detail = e.what();
  }
  std::printf("[%s] criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

struct Failure : std::runtime_error {
  explicit Failure(const std::string& what) : std::runtime_error(what) {}
};

void require(bool condition, const std::string& what) {
  if (!condition) throw Failure(what);
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double max_relative_diff(const TensorBatch& a, const TensorBatch& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) {
    double denom = std::max({std::abs(a.data()[i]), std::abs(b.data()[i]), 1e-300});
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]) / denom);
  }
  return worst;
}

std::string check_call_count_bounds() {
  const auto start = std::chrono::steady_clock::now();
  for (int seed = 0; seed < 100; ++seed) {
    WorkloadSpec spec{WorkloadKind::chain_heavy, 512, 40, 8, 5, 25, 0.1,
                      static_cast<std::uint64_t>(seed)};
    GeneratedBatch g = gen_batch(spec);
    BatchStats stats = compute_batch_stats(g.programs, g.vocab);
    std::int64_t census = count_expensive_nodes(g.programs, g.vocab);

    std::int64_t naive = count_expensive_calls(schedule_naive(g.programs, g.vocab), g.vocab);
    require(naive == census, "seed " + std::to_string(seed) + ": naive " +
                                 std::to_string(naive) + " != census " + std::to_string(census));

    std::int64_t standard =
        count_expensive_calls(schedule_standard(g.programs, g.vocab), g.vocab);
    require(standard <= std::min(stats.p, stats.b) * stats.s_max,
            "seed " + std::to_string(seed) + ": standard " + std::to_string(standard) +
                " above min(p,b)*s_max");

    std::int64_t improved =
        count_expensive_calls(schedule_improved(g.programs, g.vocab), g.vocab);
    require(improved <= stats.p * (stats.d_max + 1),
            "seed " + std::to_string(seed) + ": improved " + std::to_string(improved) +
                " above p*(d_max+1)");
  }
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  require(elapsed < 60.0, "took " + std::to_string(elapsed) + "s, budget 60s");
  std::ostringstream detail;
  detail << "100 chain-heavy batches (b=512, p=40, s<=25), zero tolerance, " << elapsed << "s";
  return detail.str();
}

std::string check_balanced_tree_bound() {
  std::ostringstream detail;
  for (std::int64_t b : {64, 256, 1024}) {
    FunctionVocab vocab = make_default_vocab(40, 8);
    std::vector<Program> batch;
    for (std::int64_t i = 0; i < b; ++i) {
      batch.push_back(gen_balanced_tree(5, vocab, mix_seed(11, static_cast<std::uint64_t>(i))));
      require(batch.back().size() == 31, "tree size != 31");
    }
    Schedule s = schedule_improved(batch, vocab);
    require(s.steps.size() == 5,
            "b=" + std::to_string(b) + ": " + std::to_string(s.steps.size()) + " steps != 5");
    std::int64_t calls = count_expensive_calls(s, vocab);
    require(calls <= 200, "b=" + std::to_string(b) + ": " + std::to_string(calls) +
                              " calls above 40*5");
    detail << "b=" << b << ": 5 steps, " << calls << " calls; ";
  }
  return detail.str() + "bound 200";
}

std::string check_oracle_equivalence() {
  double worst = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    WorkloadKind kind = (seed % 3 == 0)   ? WorkloadKind::balanced_tree
                        : (seed % 3 == 1) ? WorkloadKind::chain_heavy
                                          : WorkloadKind::random_dag;
    WorkloadSpec spec{kind, 8, 11, 8, 4, 10, 0.25, static_cast<std::uint64_t>(seed)};
    GeneratedBatch g = gen_batch(spec);
    ModuleSet modules(g.vocab, mix_seed(0xacce97, static_cast<std::uint64_t>(seed)));
    ExecResult reference =
        execute(schedule_naive(g.programs, g.vocab), g.programs, g.inputs, modules);
    for (Strategy strategy : {Strategy::standard, Strategy::improved, Strategy::online}) {
      ExecResult result =
          execute(build_schedule(strategy, g.programs, g.vocab), g.programs, g.inputs, modules);
      double diff = max_relative_diff(reference.outputs, result.outputs);
      worst = std::max(worst, diff);
      require(diff <= 1e-9, std::string("seed ") + std::to_string(seed) + " " +
                                strategy_name(strategy) + ": rel diff " + std::to_string(diff));
    }
  }
  std::ostringstream detail;
  detail << "100 seeds x {standard, improved, online} vs naive, max rel diff " << worst;
  return detail.str();
}

// Medians of 5 reps; each rep aggregates `inner` forward passes. Every
// (expert count, implementation) cell is visited inside every rep, so a slow
// environment phase lands on the whole sweep alike instead of skewing one
// point.
std::vector<double> moe_sweep_speedups(const std::vector<std::int64_t>& sweep, std::int64_t k,
                                       std::int64_t b, std::int64_t dim, int reps, int inner,
                                       std::uint64_t seed) {
  struct Cell {
    TensorBatch inputs;
    ExpertSet experts;
    GateAssignment gates;
    std::vector<double> ratios;
  };
  std::vector<Cell> cells;
  for (std::int64_t n : sweep) {
    MoeConfig cfg{n, k, b, dim, dim, 0.0};
    MoeWorkload w = gen_moe_inputs(cfg, seed);
    ExpertSet experts(cfg.experts, cfg.data_dim, cfg.hidden, mix_seed(seed, 0xe));
    GateAssignment gates = top_k_gate(w.scores, k);
    cells.push_back({std::move(w.inputs), std::move(experts), std::move(gates), {}});
  }

  for (int rep = 0; rep <= reps; ++rep) {
    for (Cell& cell : cells) {
      double naive_s = 0.0, batched_s = 0.0;
      for (int pass = 0; pass < (rep == 0 ? 1 : inner); ++pass) {
        naive_s += moe_forward_naive(cell.inputs, cell.experts, cell.gates).trace.module_seconds;
        batched_s +=
            moe_forward_batched(cell.inputs, cell.experts, cell.gates).trace.module_seconds;
      }
      // The rep's speedup is its own ratio, so a load spike during the rep
      // hits numerator and denominator together.
      if (rep > 0) cell.ratios.push_back(naive_s / batched_s);
    }
  }

  std::vector<double> speedups;
  for (Cell& cell : cells) {
    speedups.push_back(median(cell.ratios));
  }
  return speedups;
}

std::string check_moe_call_reduction() {
  MoeConfig cfg{64, 4, 256, 16, 16, 0.0};
  MoeWorkload w = gen_moe_inputs(cfg, 2026);
  ExpertSet experts(cfg.experts, cfg.data_dim, cfg.hidden, 4);
  GateAssignment gates = top_k_gate(w.scores, cfg.active_per_example);

  MoeResult naive = moe_forward_naive(w.inputs, experts, gates);
  MoeResult batched = moe_forward_batched(w.inputs, experts, gates);
  require(naive.trace.expensive_calls == 1024,
          "naive calls " + std::to_string(naive.trace.expensive_calls) + " != 1024");
  require(batched.trace.expensive_calls <= 64,
          "batched calls " + std::to_string(batched.trace.expensive_calls) + " > 64");
  double diff = max_relative_diff(naive.outputs, batched.outputs);
  require(diff <= 1e-9, "outputs diverge: " + std::to_string(diff));

  // Decay regime of the sweep: expert groups shrink from 16 rows to 4 as n
  // approaches b. Medians of 5 reps; 2% per-step slack absorbs timer noise,
  // the aggregate decay must reach 10%.
  const std::vector<std::int64_t> sweep{64, 128, 256};
  std::vector<double> speedups = moe_sweep_speedups(sweep, 4, 256, 16, 5, 40, 31337);
  std::ostringstream detail;
  detail << "calls 1024 -> " << batched.trace.expensive_calls << ", sweep speedups";
  for (double s : speedups) detail << " " << s;
  for (size_t i = 0; i + 1 < speedups.size(); ++i) {
    require(speedups[i + 1] <= speedups[i] * 1.02,
            "speedup rose from n=" + std::to_string(sweep[i]) + " to n=" +
                std::to_string(sweep[i + 1]) + " (" + std::to_string(speedups[i]) + " -> " +
                std::to_string(speedups[i + 1]) + ")");
  }
  require(speedups.back() <= 0.90 * speedups.front(),
          "total decay below 10%: " + std::to_string(speedups.front()) + " -> " +
              std::to_string(speedups.back()));
  return detail.str();
}

std::string check_memory_model() {
  MoeConfig cfg{10000, 100, 1, 2048, 2048, 1e6};
  double ratio = moe_memory_ratio(cfg);
  require(std::abs(ratio - 7.3) <= 0.05,
          "ratio " + std::to_string(ratio) + " outside 7.3 +/- 0.05");

  MoeConfig doubled = cfg;
  doubled.experts *= 2;
  require(moe_memory_ratio(doubled) == ratio, "ratio changed under n doubling");
  MoeConfig halved = cfg;
  halved.experts /= 2;
  require(moe_memory_ratio(halved) == ratio, "ratio changed under n halving");

  MoeConfig small{6, 2, 1, 4, 5, 0.0};
  ExpertSet experts(small.experts, small.data_dim, small.hidden, 1);
  require(experts.weight_element_count() == moe_param_count(small),
          "allocated weights " + std::to_string(experts.weight_element_count()) +
              " != param_count " + std::to_string(moe_param_count(small)));

  std::ostringstream detail;
  detail << "ratio " << ratio << " (target 7.3 +/- 0.05), n-invariant, params exact";
  return detail.str();
}

struct TrendRow {
  std::int64_t b;
  std::int64_t naive_calls;
  std::int64_t improved_calls;
  double naive_ms;
  double improved_ms;
  double speedup;
};

std::string check_speedup_trend() {
  const std::vector<std::int64_t> batch_sizes{8, 64, 512};
  std::vector<TrendRow> rows;

  for (std::int64_t b : batch_sizes) {
    WorkloadSpec spec{WorkloadKind::chain_heavy, b, 40, 128, 5, 16, 0.1, 7};
    GeneratedBatch g = gen_batch(spec);
    ModuleSet modules(g.vocab, 99);
    Schedule naive = schedule_naive(g.programs, g.vocab);
    Schedule improved = schedule_improved(g.programs, g.vocab);

    // Each rep interleaves naive and improved passes, and the asserted
    // speedup is the median of the per-rep ratios: load spikes hit both
    // sides of a rep together and cancel in its ratio.
    const int reps = 5;
    const int inner = static_cast<int>(std::max<std::int64_t>(2, 1024 / b));
    std::vector<double> naive_s, improved_s, ratios;
    TrendRow row{b, 0, 0, 0.0, 0.0, 0.0};
    for (int rep = 0; rep <= reps; ++rep) {
      double tn = 0.0, ti = 0.0;
      for (int pass = 0; pass < (rep == 0 ? 1 : inner); ++pass) {
        ExecResult rn = execute(naive, g.programs, g.inputs, modules);
        ExecResult ri = execute(improved, g.programs, g.inputs, modules);
        tn += rn.trace.module_seconds;
        ti += ri.trace.module_seconds;
        row.naive_calls = rn.trace.expensive_calls;
        row.improved_calls = ri.trace.expensive_calls;
      }
      if (rep > 0) {
        naive_s.push_back(tn / inner);
        improved_s.push_back(ti / inner);
        ratios.push_back(tn / ti);
      }
    }
    row.naive_ms = median(naive_s) * 1e3;
    row.improved_ms = median(improved_s) * 1e3;
    row.speedup = median(ratios);
    rows.push_back(row);
  }

  // The curve itself, for eyeballing against the near-linear regime.
  std::ofstream csv("acceptance_speedup.csv");
  csv << "scheduler,b,calls,module_ms,speedup\n";
  std::printf("    scheduler,b,calls,module_ms,speedup\n");
  for (const TrendRow& row : rows) {
    csv << "naive," << row.b << "," << row.naive_calls << "," << row.naive_ms << ",1.0\n";
    csv << "improved," << row.b << "," << row.improved_calls << "," << row.improved_ms << ","
        << row.speedup << "\n";
    std::printf("    naive,%lld,%lld,%.4f,1.0\n", static_cast<long long>(row.b),
                static_cast<long long>(row.naive_calls), row.naive_ms);
    std::printf("    improved,%lld,%lld,%.4f,%.4f\n", static_cast<long long>(row.b),
                static_cast<long long>(row.improved_calls), row.improved_ms, row.speedup);
  }

  require(rows[1].speedup >= 1.0,
          "speedup at b=64 is " + std::to_string(rows[1].speedup) + " < 1.0");
  for (size_t i = 0; i + 1 < rows.size(); ++i) {
    require(rows[i + 1].speedup >= 0.85 * rows[i].speedup,
            "speedup decreased beyond the 15% band: b=" + std::to_string(rows[i].b) + " " +
                std::to_string(rows[i].speedup) + " -> b=" + std::to_string(rows[i + 1].b) +
                " " + std::to_string(rows[i + 1].speedup));
  }
  std::ostringstream detail;
  detail << "medians of 5 reps, speedups";
  for (const TrendRow& row : rows) detail << " b=" << row.b << ":" << row.speedup;
  detail << " (curve in acceptance_speedup.csv)";
  return detail.str();
}

std::string check_property_suite() {
  const auto start = std::chrono::steady_clock::now();
  VerifyOptions options;
  options.seeds = 100;
  options.b = 8;
  options.p = 12;
  options.length = 12;
  options.width = 8;
  VerifyReport report = run_property_suite(options);
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  require(report.cases_run == 100, "expected 100 cases, ran " + std::to_string(report.cases_run));
  if (!report.failures.empty()) {
    throw Failure(std::to_string(report.failures.size()) +
                  " failures, first: " + report.failures.front());
  }
  require(elapsed < 300.0, "suite took " + std::to_string(elapsed) + "s, budget 300s");
  std::ostringstream detail;
  detail << "100 seeds, completeness/ordering/single-assignment/round-trip/determinism, "
         << elapsed << "s";
  return detail.str();
}

}  // namespace

int main() {
  criterion(1, "call-count bounds are exact and deterministic", check_call_count_bounds);
  criterion(2, "balanced trees: depth-pooled calls <= 200 in exactly 5 steps",
            check_balanced_tree_bound);
  criterion(3, "all schedules reproduce the naive outputs within 1e-9",
            check_oracle_equivalence);
  criterion(4, "MOE batching: 1024 -> <=64 calls, decaying speedup toward n=b",
            check_moe_call_reduction);
  criterion(5, "memory model: worked ratio 7.3, n-invariance, exact parameter count",
            check_memory_model);
  criterion(6, "module-time speedup >= 1 at b=64 and non-decreasing over b",
            check_speedup_trend);
  criterion(7, "property suite holds over 100 seeds", check_property_suite);

  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
