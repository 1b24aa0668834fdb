// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynbatch/verify.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>
#include <thread>

#include "dynbatch/executor.hpp"
#include "dynbatch/schedule.hpp"
#include "dynbatch/rng.hpp"
#include "dynbatch/serialize.hpp"
#include "dynbatch/workload.hpp"

namespace dynbatch {

namespace {

double max_relative_diff(const TensorBatch& a, const TensorBatch& b) {
  double worst = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (size_t i = 0; i < da.size(); ++i) {
    double denom = std::max({std::abs(da[i]), std::abs(db[i]), 1e-300});
    worst = std::max(worst, std::abs(da[i] - db[i]) / denom);
  }
  return worst;
}

struct CaseChecker {
  const VerifyOptions& options;
  std::vector<std::string>& failures;
  int seed;

  void fail(const std::string& what) {
    failures.push_back("seed " + std::to_string(seed) + ": " + what);
  }

  void require(bool condition, const std::string& what) {
    if (!condition) fail(what);
  }

  void run() {
    WorkloadSpec spec;
    switch (seed % 3) {
      case 0: spec.kind = WorkloadKind::chain_heavy; break;
      case 1: spec.kind = WorkloadKind::balanced_tree; break;
      default: spec.kind = WorkloadKind::random_dag; break;
    }
    spec.b = options.b;
    spec.p = options.p;
    spec.width = options.width;
    spec.length = options.length;
    spec.depth = std::max(1, static_cast<int>(std::log2(std::max(2, options.length))));
    spec.branch_prob = (seed % 5) * 0.2;
    spec.seed = mix_seed(options.base_seed, static_cast<std::uint64_t>(seed));

    GeneratedBatch batch = gen_batch(spec);
    const std::span<const Program> programs(batch.programs);

    for (size_t e = 0; e < batch.programs.size(); ++e) {
      ValidationReport report = validate(batch.programs[e], batch.vocab);
      if (!report.ok()) {
        fail("generated program " + std::to_string(e) + " invalid: " + report.to_string());
        return;
      }
    }

    // Prefix round-trip holds for tree-shaped programs.
    if (spec.kind != WorkloadKind::random_dag) {
      for (const Program& program : batch.programs) {
        std::vector<int> sequence = prefix_function_sequence(program);
        Program rebuilt = build_program_from_prefix(sequence, batch.vocab);
        require(rebuilt.nodes == program.nodes && rebuilt.root == program.root,
                "prefix round-trip changed the program");
      }
    }

    // Label monotonicity along every edge.
    for (const Program& program : batch.programs) {
      DepthLabels labels = max_root_distance_labels(program);
      for (int v = 0; v < program.size(); ++v) {
        for (int c : program.nodes[static_cast<size_t>(v)].children) {
          require(labels.labels[static_cast<size_t>(c)] >
                      labels.labels[static_cast<size_t>(v)],
                  "label not monotone along edge");
        }
      }
    }

    BatchStats stats = compute_batch_stats(programs, batch.vocab);
    std::int64_t census = count_expensive_nodes(programs, batch.vocab);

    Schedule naive = schedule_naive(programs, batch.vocab);
    Schedule standard = schedule_standard(programs, batch.vocab);
    Schedule improved = schedule_improved(programs, batch.vocab);
    Schedule online = schedule_online_full(programs, batch.vocab);

    for (const auto* schedule : {&naive, &standard, &improved, &online}) {
      ScheduleReport report = verify_schedule(*schedule, programs);
      if (!report.ok()) {
        fail(std::string(strategy_name(schedule->strategy)) +
             " schedule invalid: " + report.to_string());
        return;
      }
    }

    require(count_expensive_calls(naive, batch.vocab) == census,
            "naive call count differs from expensive-node census");
    require(count_expensive_calls(standard, batch.vocab) <=
                std::min(stats.p, stats.b) * stats.s_max,
            "standard call count above min(p,b)*s_max");
    require(count_expensive_calls(improved, batch.vocab) <= stats.p * (stats.d_max + 1),
            "improved call count above p*(d_max+1)");
    require(count_expensive_calls(online, batch.vocab) <= stats.p * std::max<std::int64_t>(stats.d_max, 0),
            "online call count above p*d_max");

    require(static_cast<std::int64_t>(standard.steps.size()) == stats.s_max,
            "standard step count is not s_max");
    require(static_cast<std::int64_t>(improved.steps.size()) == stats.d_max + 1,
            "improved step count is not d_max+1");
    require(stats.d_max + 1 <= stats.s_max, "d_max+1 exceeds s_max");

    // Determinism: rebuilding from the same batch gives identical schedules.
    require(schedule_improved(programs, batch.vocab) == improved,
            "improved schedule not deterministic");
    require(schedule_standard(programs, batch.vocab) == standard,
            "standard schedule not deterministic");

    const std::uint64_t module_seed = mix_seed(spec.seed, 0xd00dULL);
    ModuleSet modules(batch.vocab, module_seed);
    ExecResult reference = execute(naive, programs, batch.inputs, modules);
    for (const auto* schedule : {&standard, &improved, &online}) {
      ExecResult result = execute(*schedule, programs, batch.inputs, modules);
      double diff = max_relative_diff(reference.outputs, result.outputs);
      require(diff <= 1e-9, std::string(strategy_name(schedule->strategy)) +
                                " outputs diverge from naive (rel " + std::to_string(diff) + ")");
      require(result.trace.expensive_calls == count_expensive_calls(*schedule, batch.vocab),
              "trace call count differs from static count");
    }

    // Re-executing is bit-identical.
    ExecResult again = execute(improved, programs, batch.inputs, modules);
    ExecResult first = execute(improved, programs, batch.inputs, modules);
    require(again.outputs == first.outputs, "re-execution changed outputs");
  }
};

void check_single_assignment(std::vector<std::string>& failures) {
  FunctionVocab vocab = make_default_vocab(4, 3);
  Program program = build_program_from_prefix(std::vector<int>{2, 0}, vocab);
  std::vector<Program> batch{program};
  ValueStore store(batch, 3);
  std::vector<double> row{1.0, 2.0, 3.0};
  store.set({0, 0}, row);
  bool rejected = false;
  try {
    store.set({0, 0}, row);
  } catch (const Error& e) {
    rejected = e.code() == Errc::single_assignment_violation;
  }
  if (!rejected) failures.push_back("value store accepted a second write to the same node");
}

VerifyReport run_range(const VerifyOptions& options, int first, int last,
                       const std::function<void(const std::string&)>& log) {
  VerifyReport report;
  for (int seed = first; seed < last; ++seed) {
    CaseChecker checker{options, report.failures, seed};
    try {
      checker.run();
    } catch (const std::exception& e) {
      report.failures.push_back("seed " + std::to_string(seed) + ": exception: " + e.what());
    }
    ++report.cases_run;
    if (log && (seed + 1) % 25 == 0) {
      log("checked " + std::to_string(seed + 1) + " seeds, " +
          std::to_string(report.failures.size()) + " failures");
    }
  }
  return report;
}

}  // namespace

VerifyReport run_property_suite(const VerifyOptions& options,
                                const std::function<void(const std::string&)>& log) {
  VerifyReport report;
  check_single_assignment(report.failures);

  if (options.seeds <= 0) {
    if (log) log("warning: 0 seeds requested, suite is vacuous");
    return report;
  }

  if (!options.parallel || options.seeds < 4) {
    VerifyReport inner = run_range(options, 0, options.seeds, log);
    report.cases_run = inner.cases_run;
    for (auto& f : inner.failures) report.failures.push_back(std::move(f));
    return report;
  }

  const int workers = std::min<int>(static_cast<int>(std::thread::hardware_concurrency()),
                                    std::max(1, options.seeds / 4));
  std::vector<std::future<VerifyReport>> futures;
  int chunk = (options.seeds + workers - 1) / workers;
  for (int first = 0; first < options.seeds; first += chunk) {
    int last = std::min(options.seeds, first + chunk);
    futures.push_back(std::async(std::launch::async, [options, first, last] {
      return run_range(options, first, last, {});
    }));
  }
  for (auto& future : futures) {
    VerifyReport part = future.get();
    report.cases_run += part.cases_run;
    for (auto& f : part.failures) report.failures.push_back(std::move(f));
  }
  std::sort(report.failures.begin(), report.failures.end());
  if (log) {
    log("checked " + std::to_string(report.cases_run) + " seeds in parallel, " +
        std::to_string(report.failures.size()) + " failures");
  }
  return report;
}

}  // namespace dynbatch
