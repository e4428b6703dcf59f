// Copyright 2026 The nsgp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nsgp/observation.hpp"

#include "nsgp/error.hpp"

#include <algorithm>
#include <string>

namespace nsgp {

ObservationOperator::ObservationOperator(Index cols) : cols_(cols) {
  if (cols < 1) fail(ErrorCode::kInvalidArgument, "observation operator needs n >= 1");
}

ObservationOperator ObservationOperator::identity(Index n) {
  ObservationOperator a(n);
  for (Index i = 0; i < n; ++i) a.add_row(i, 1.0);
  return a;
}

void ObservationOperator::add_row(Index col, double w0, double w1) {
  if (col < 0 || col >= cols_ || (w1 != 0.0 && col + 1 >= cols_)) {
    fail(ErrorCode::kDimensionMismatch,
         "observation row references column " + std::to_string(col) +
             " outside [0, " + std::to_string(cols_) + ")");
  }
  rows_.push_back(Row{col, w0, w1});
}

Vector ObservationOperator::apply(const Vector& z) const {
  if (z.size() != cols_) fail(ErrorCode::kDimensionMismatch, "A z: length mismatch");
  Vector out(rows());
  for (Index r = 0; r < rows(); ++r) {
    const Row& e = rows_[static_cast<std::size_t>(r)];
    if (e.col < 0) {
      out[r] = 0.0;
      continue;
    }
    double v = e.w0 * z[e.col];
    if (e.w1 != 0.0) v += e.w1 * z[e.col + 1];
    out[r] = v;
  }
  return out;
}

Vector ObservationOperator::apply_transpose(const Vector& y) const {
  if (y.size() != rows()) fail(ErrorCode::kDimensionMismatch, "A^T y: length mismatch");
  Vector out = Vector::Zero(cols_);
  for (Index r = 0; r < rows(); ++r) {
    const Row& e = rows_[static_cast<std::size_t>(r)];
    if (e.col < 0) continue;
    out[e.col] += e.w0 * y[r];
    if (e.w1 != 0.0) out[e.col + 1] += e.w1 * y[r];
  }
  return out;
}

BandedMatrix ObservationOperator::gram() const {
  const Index w = std::min<Index>(1, cols_ - 1);
  BandedMatrix g(cols_, w, w);
  for (const Row& e : rows_) {
    if (e.col < 0) continue;
    g.ref(e.col, e.col) += e.w0 * e.w0;
    if (e.w1 != 0.0) {
      g.ref(e.col + 1, e.col + 1) += e.w1 * e.w1;
      g.ref(e.col, e.col + 1) += e.w0 * e.w1;
      g.ref(e.col + 1, e.col) += e.w0 * e.w1;
    }
  }
  return g;
}

Matrix ObservationOperator::to_dense() const {
  Matrix a = Matrix::Zero(rows(), cols_);
  for (Index r = 0; r < rows(); ++r) {
    const Row& e = rows_[static_cast<std::size_t>(r)];
    if (e.col < 0) continue;
    a(r, e.col) += e.w0;
    if (e.w1 != 0.0) a(r, e.col + 1) += e.w1;
  }
  return a;
}

}  // namespace nsgp
