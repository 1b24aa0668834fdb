// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "dynbatch/executor.hpp"
#include "dynbatch/serialize.hpp"
#include "dynbatch/workload.hpp"

using namespace dynbatch;

TEST_CASE("program set JSON round trip preserves structure") {
  WorkloadSpec spec{WorkloadKind::chain_heavy, 6, 8, 4, 4, 9, 0.3, 2};
  GeneratedBatch g = gen_batch(spec);
  std::string text = program_set_to_json(g.vocab, g.programs);
  ProgramSet parsed = program_set_from_json(text, 4);

  REQUIRE(parsed.programs.size() == g.programs.size());
  CHECK(parsed.vocab.size() == g.vocab.size());
  CHECK(parsed.vocab.width() == 4);
  for (size_t i = 0; i < g.programs.size(); ++i) {
    CHECK(parsed.programs[i].nodes == g.programs[i].nodes);
  }
  for (int fid = 0; fid < g.vocab.size(); ++fid) {
    CHECK(parsed.vocab.spec(fid).arity == g.vocab.spec(fid).arity);
    CHECK(parsed.vocab.spec(fid).cost == g.vocab.spec(fid).cost);
  }
}

TEST_CASE("program set JSON accepts the documented wire format") {
  const std::string text = R"({
    "vocab": [
      {"id": 0, "arity": 0, "cost": "free"},
      {"id": 1, "arity": 2, "cost": "expensive"},
      {"id": 2, "arity": 1, "cost": "expensive"}
    ],
    "programs": [[1, 0, 2, 0], [0]]
  })";
  ProgramSet set = program_set_from_json(text, 8);
  REQUIRE(set.programs.size() == 2);
  CHECK(set.programs[0].size() == 4);
  CHECK(set.programs[0].nodes[0].children == std::vector<int>{1, 2});
  CHECK(set.programs[1].size() == 1);
}

TEST_CASE("program set JSON rejects malformed input") {
  CHECK_THROWS_WITH_AS(program_set_from_json("not json", 4), doctest::Contains("ParseError"),
                       Error);
  CHECK_THROWS_WITH_AS(program_set_from_json("{\"vocab\": []}", 4),
                       doctest::Contains("ParseError"), Error);
  // Unknown function id inside a program.
  const std::string bad = R"({
    "vocab": [{"id": 0, "arity": 0, "cost": "free"}],
    "programs": [[7]]
  })";
  CHECK_THROWS_WITH_AS(program_set_from_json(bad, 4), doctest::Contains("UnknownFunction"),
                       Error);
  const std::string bad_cost = R"({
    "vocab": [{"id": 0, "arity": 0, "cost": "cheap"}],
    "programs": [[0]]
  })";
  CHECK_THROWS_AS(program_set_from_json(bad_cost, 4), Error);
}

TEST_CASE("schedule dump format is stable") {
  FunctionVocab vocab = make_default_vocab(4, 4);
  std::vector<Program> batch{build_program_from_prefix(std::vector<int>{2, 0}, vocab),
                             build_program_from_prefix(std::vector<int>{2, 0}, vocab)};
  Schedule s = schedule_improved(batch, vocab);
  const std::string expected = R"({
  "steps": [
    [
      {
        "function_id": 0,
        "members": [
          [
            0,
            1
          ],
          [
            1,
            1
          ]
        ]
      }
    ],
    [
      {
        "function_id": 2,
        "members": [
          [
            0,
            0
          ],
          [
            1,
            0
          ]
        ]
      }
    ]
  ],
  "strategy": "improved"
})";
  CHECK(schedule_to_json(s) == expected);
}

TEST_CASE("moe config JSON round trip validates on parse") {
  MoeConfig cfg{128, 4, 64, 32, 48, 2.5};
  MoeConfig parsed = moe_config_from_json(moe_config_to_json(cfg));
  CHECK(parsed.experts == cfg.experts);
  CHECK(parsed.active_per_example == cfg.active_per_example);
  CHECK(parsed.batch == cfg.batch);
  CHECK(parsed.data_dim == cfg.data_dim);
  CHECK(parsed.hidden == cfg.hidden);
  CHECK(parsed.examples_per_expert == cfg.examples_per_expert);

  CHECK_THROWS_AS(moe_config_from_json(R"({"n": 2, "k": 5})"), Error);
  CHECK_THROWS_AS(moe_config_from_json("nope"), Error);
}

TEST_CASE("trace JSON carries the accounting fields") {
  WorkloadSpec spec{WorkloadKind::chain_heavy, 4, 8, 4, 4, 6, 0.0, 8};
  GeneratedBatch g = gen_batch(spec);
  ExecResult result =
      execute(schedule_improved(g.programs, g.vocab), g.programs, g.inputs, g.vocab, 1);
  std::string text = trace_to_json(result.trace);
  for (const char* field : {"expensive_calls", "per_function_calls", "per_step_seconds",
                            "module_seconds", "stacking_seconds", "peak_group_rows"}) {
    CHECK(text.find(field) != std::string::npos);
  }
}
