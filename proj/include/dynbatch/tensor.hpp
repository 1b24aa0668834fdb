// Copyright 2026 The dynbatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dynbatch/error.hpp"

namespace dynbatch {

// Row-major rows x width matrix of 64-bit reals; the unit of batched module
// execution.
class TensorBatch {
 public:
  TensorBatch() = default;
  TensorBatch(std::int64_t rows, std::int64_t width)
      : rows_(rows), width_(width), data_(static_cast<size_t>(rows * width), 0.0) {
    if (rows < 0 || width < 0) throw_error(Errc::invalid_argument, "negative tensor shape");
  }

  std::int64_t rows() const { return rows_; }
  std::int64_t width() const { return width_; }

  double& at(std::int64_t r, std::int64_t c) {
    return data_[static_cast<size_t>(r * width_ + c)];
  }
  double at(std::int64_t r, std::int64_t c) const {
    return data_[static_cast<size_t>(r * width_ + c)];
  }

  std::span<double> row(std::int64_t r) {
    return {data_.data() + r * width_, static_cast<size_t>(width_)};
  }
  std::span<const double> row(std::int64_t r) const {
    return {data_.data() + r * width_, static_cast<size_t>(width_)};
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const TensorBatch& a, const TensorBatch& b) {
    return a.rows_ == b.rows_ && a.width_ == b.width_ && a.data_ == b.data_;
  }

 private:
  std::int64_t rows_ = 0;
  std::int64_t width_ = 0;
  std::vector<double> data_;
};

}  // namespace dynbatch
