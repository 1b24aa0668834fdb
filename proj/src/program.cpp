// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynbatch/program.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace dynbatch {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::ok: return "Ok";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::unknown_function: return "UnknownFunction";
    case Errc::underfull_sequence: return "UnderfullSequence";
    case Errc::overfull_sequence: return "OverfullSequence";
    case Errc::invalid_program: return "InvalidProgram";
    case Errc::dependency_violation: return "DependencyViolation";
    case Errc::missing_operand: return "MissingOperand";
    case Errc::row_count_mismatch: return "RowCountMismatch";
    case Errc::width_mismatch: return "WidthMismatch";
    case Errc::arity_mismatch: return "ArityMismatch";
    case Errc::non_finite_value: return "NonFiniteValue";
    case Errc::k_too_large: return "KTooLarge";
    case Errc::vocab_missing_arity: return "VocabMissingArity";
    case Errc::single_assignment_violation: return "SingleAssignmentViolation";
    case Errc::parse_error: return "ParseError";
    case Errc::verification_failed: return "VerificationFailed";
  }
  return "UnknownError";
}

const char* violation_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::bad_root: return "BadRoot";
    case ViolationKind::unknown_function: return "UnknownFunction";
    case ViolationKind::bad_child_ref: return "BadChildRef";
    case ViolationKind::arity_mismatch: return "ArityMismatch";
    case ViolationKind::cycle_detected: return "CycleDetected";
    case ViolationKind::unreachable_node: return "UnreachableNode";
    case ViolationKind::free_cost_required: return "FreeCostRequired";
  }
  return "UnknownViolation";
}

std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::ostringstream out;
  for (size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << violation_name(violations[i].kind) << ": " << violations[i].detail;
  }
  return out.str();
}

FunctionVocab::FunctionVocab(std::vector<ModuleSpec> specs) : specs_(std::move(specs)) {
  if (specs_.empty()) throw_error(Errc::invalid_argument, "vocabulary is empty");
  bool has_arity0 = false;
  for (size_t i = 0; i < specs_.size(); ++i) {
    const ModuleSpec& s = specs_[i];
    if (s.function_id != static_cast<int>(i)) {
      throw_error(Errc::invalid_argument,
                  "function ids must be exactly 0..p-1, got " + std::to_string(s.function_id) +
                      " at position " + std::to_string(i));
    }
    if (s.arity < 0) throw_error(Errc::invalid_argument, "negative arity");
    if (s.in_width <= 0 || s.out_width <= 0) {
      throw_error(Errc::invalid_argument, "widths must be positive");
    }
    if (s.out_width != specs_[0].out_width || s.in_width != s.out_width) {
      throw_error(Errc::invalid_argument, "feature width must be uniform across the vocabulary");
    }
    if (s.arity == 0) {
      has_arity0 = true;
      if (s.cost != CostClass::free) {
        throw_error(Errc::invalid_argument,
                    "arity-0 function " + std::to_string(s.function_id) +
                        " must be free (input provider)");
      }
    }
  }
  if (!has_arity0) throw_error(Errc::invalid_argument, "vocabulary needs an arity-0 function");
  width_ = specs_[0].out_width;
}

const ModuleSpec& FunctionVocab::spec(int function_id) const {
  if (!contains(function_id)) {
    throw_error(Errc::unknown_function, "function id " + std::to_string(function_id));
  }
  return specs_[static_cast<size_t>(function_id)];
}

Program build_program_from_prefix(std::span<const int> functions, const FunctionVocab& vocab) {
  if (functions.empty()) throw_error(Errc::invalid_argument, "empty function sequence");

  auto arity_of = [&](int fid) {
    if (!vocab.contains(fid)) {
      throw_error(Errc::unknown_function, "function id " + std::to_string(fid));
    }
    return vocab.spec(fid).arity;
  };

  Program program;
  program.nodes.reserve(functions.size());
  program.root = 0;

  struct Open {
    int node_id;
    int remaining;
  };
  std::vector<Open> open;

  program.nodes.push_back({functions[0], {}});
  if (int a = arity_of(functions[0]); a > 0) open.push_back({0, a});

  size_t pos = 1;
  while (!open.empty()) {
    if (pos >= functions.size()) {
      throw_error(Errc::underfull_sequence,
                  "sequence of length " + std::to_string(functions.size()) +
                      " ends with unfilled arities");
    }
    int fid = functions[pos];
    int arity = arity_of(fid);
    int node_id = static_cast<int>(program.nodes.size());
    program.nodes.push_back({fid, {}});

    Open& parent = open.back();
    program.nodes[static_cast<size_t>(parent.node_id)].children.push_back(node_id);
    if (--parent.remaining == 0) open.pop_back();
    if (arity > 0) open.push_back({node_id, arity});
    ++pos;
  }

  if (pos != functions.size()) {
    throw_error(Errc::overfull_sequence,
                std::to_string(functions.size() - pos) + " tokens remain after the root closes");
  }
  return program;
}

ValidationReport validate(const Program& program, const FunctionVocab& vocab) {
  ValidationReport report;
  const int n = program.size();

  if (n == 0 || program.root < 0 || program.root >= n) {
    report.violations.push_back(
        {ViolationKind::bad_root, "root " + std::to_string(program.root) + " with " +
                                      std::to_string(n) + " nodes"});
    return report;
  }

  for (int v = 0; v < n; ++v) {
    const ProgramNode& node = program.nodes[static_cast<size_t>(v)];
    if (!vocab.contains(node.function_id)) {
      report.violations.push_back({ViolationKind::unknown_function,
                                   "node " + std::to_string(v) + " uses function id " +
                                       std::to_string(node.function_id)});
      continue;
    }
    const ModuleSpec& spec = vocab.spec(node.function_id);
    if (static_cast<int>(node.children.size()) != spec.arity) {
      report.violations.push_back(
          {ViolationKind::arity_mismatch,
           "node " + std::to_string(v) + " has " + std::to_string(node.children.size()) +
               " children, function " + std::to_string(node.function_id) + " has arity " +
               std::to_string(spec.arity)});
    }
    for (int c : node.children) {
      if (c < 0 || c >= n) {
        report.violations.push_back({ViolationKind::bad_child_ref,
                                     "node " + std::to_string(v) + " references node " +
                                         std::to_string(c)});
      }
    }
  }

  // Iterative coloring DFS: gray hit = cycle; unvisited afterwards = unreachable.
  enum : char { white, gray, black };
  std::vector<char> color(static_cast<size_t>(n), white);
  struct Frame {
    int node;
    size_t next_child;
  };
  std::vector<Frame> stack;
  stack.push_back({program.root, 0});
  color[static_cast<size_t>(program.root)] = gray;
  bool cycle_reported = false;
  while (!stack.empty()) {
    Frame& frame = stack.back();
    const auto& children = program.nodes[static_cast<size_t>(frame.node)].children;
    if (frame.next_child < children.size()) {
      int c = children[frame.next_child++];
      if (c < 0 || c >= n) continue;  // already reported above
      if (color[static_cast<size_t>(c)] == gray) {
        if (!cycle_reported) {
          report.violations.push_back({ViolationKind::cycle_detected,
                                       "edge " + std::to_string(frame.node) + "->" +
                                           std::to_string(c) + " closes a cycle"});
          cycle_reported = true;
        }
      } else if (color[static_cast<size_t>(c)] == white) {
        color[static_cast<size_t>(c)] = gray;
        stack.push_back({c, 0});
      }
    } else {
      color[static_cast<size_t>(frame.node)] = black;
      stack.pop_back();
    }
  }
  for (int v = 0; v < n; ++v) {
    if (color[static_cast<size_t>(v)] == white) {
      report.violations.push_back(
          {ViolationKind::unreachable_node, "node " + std::to_string(v)});
    }
  }
  return report;
}

namespace {

// Structural subset of validate(): shape only, no vocabulary.
void require_well_formed(const Program& program) {
  const int n = program.size();
  if (n == 0 || program.root < 0 || program.root >= n) {
    throw_error(Errc::invalid_program, "bad root");
  }
  for (int v = 0; v < n; ++v) {
    for (int c : program.nodes[static_cast<size_t>(v)].children) {
      if (c < 0 || c >= n) throw_error(Errc::invalid_program, "child reference out of range");
    }
  }
}

}  // namespace

DepthLabels max_root_distance_labels(const Program& program) {
  require_well_formed(program);
  const int n = program.size();

  std::vector<int> indegree(static_cast<size_t>(n), 0);
  for (const ProgramNode& node : program.nodes) {
    for (int c : node.children) ++indegree[static_cast<size_t>(c)];
  }

  DepthLabels out;
  out.labels.assign(static_cast<size_t>(n), 0);

  // Root is the unique source when every node is reachable; Kahn order then
  // relaxes each edge exactly once.
  std::vector<int> queue;
  queue.reserve(static_cast<size_t>(n));
  queue.push_back(program.root);
  size_t head = 0;
  int processed = 0;
  while (head < queue.size()) {
    int v = queue[head++];
    ++processed;
    for (int c : program.nodes[static_cast<size_t>(v)].children) {
      auto& label = out.labels[static_cast<size_t>(c)];
      label = std::max(label, out.labels[static_cast<size_t>(v)] + 1);
      if (--indegree[static_cast<size_t>(c)] == 0) queue.push_back(c);
    }
  }
  if (processed != n) {
    throw_error(Errc::invalid_program, "cycle or unreachable node");
  }
  out.max_label = *std::max_element(out.labels.begin(), out.labels.end());
  return out;
}

std::vector<int> postorder_flatten(const Program& program) {
  require_well_formed(program);
  const int n = program.size();

  std::vector<int> order;
  order.reserve(static_cast<size_t>(n));
  std::vector<char> done(static_cast<size_t>(n), 0);
  struct Frame {
    int node;
    size_t next_child;
  };
  std::vector<Frame> stack;
  stack.push_back({program.root, 0});
  while (!stack.empty()) {
    Frame& frame = stack.back();
    const auto& children = program.nodes[static_cast<size_t>(frame.node)].children;
    if (frame.next_child < children.size()) {
      int c = children[frame.next_child++];
      if (!done[static_cast<size_t>(c)]) stack.push_back({c, 0});
    } else {
      done[static_cast<size_t>(frame.node)] = 1;
      order.push_back(frame.node);
      stack.pop_back();
    }
  }
  if (static_cast<int>(order.size()) != n) {
    throw_error(Errc::invalid_program, "cycle or unreachable node");
  }
  return order;
}

std::vector<int> prefix_function_sequence(const Program& program) {
  require_well_formed(program);
  std::vector<int> out;
  out.reserve(program.nodes.size());
  struct Frame {
    int node;
    size_t next_child;
  };
  std::vector<Frame> stack;
  stack.push_back({program.root, 0});
  out.push_back(program.nodes[static_cast<size_t>(program.root)].function_id);
  // Shared subtrees are re-emitted per reference, mirroring prefix expansion.
  while (!stack.empty()) {
    Frame& frame = stack.back();
    const auto& children = program.nodes[static_cast<size_t>(frame.node)].children;
    if (frame.next_child < children.size()) {
      int c = children[frame.next_child++];
      if (out.size() > program.nodes.size() * 64 + 64) {
        throw_error(Errc::invalid_program, "prefix expansion blow-up");
      }
      out.push_back(program.nodes[static_cast<size_t>(c)].function_id);
      stack.push_back({c, 0});
    } else {
      stack.pop_back();
    }
  }
  return out;
}

}  // namespace dynbatch
