// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dynbatch {

enum class Errc {
  ok = 0,
  invalid_argument,
  unknown_function,
  underfull_sequence,
  overfull_sequence,
  invalid_program,
  dependency_violation,
  missing_operand,
  row_count_mismatch,
  width_mismatch,
  arity_mismatch,
  non_finite_value,
  k_too_large,
  vocab_missing_arity,
  single_assignment_violation,
  parse_error,
  verification_failed,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void throw_error(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace dynbatch
