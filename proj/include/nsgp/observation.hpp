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

#ifndef NSGP_OBSERVATION_HPP
#define NSGP_OBSERVATION_HPP

#include "nsgp/banded.hpp"

#include <vector>

namespace nsgp {

/// Sparse m x n observation matrix whose rows hold at most two nonzeros on
/// grid-adjacent columns. The restriction keeps A^T A tridiagonal, so every
/// posterior precision Q + s A^T A stays pentadiagonal.
class ObservationOperator {
 public:
  struct Row {
    Index col = -1;  // -1 marks an all-zero row
    double w0 = 0.0;
    double w1 = 0.0;  // weight on col + 1
  };

  explicit ObservationOperator(Index cols);

  /// Dense m x n selection/identity when m == n.
  static ObservationOperator identity(Index n);

  void add_row(Index col, double w0, double w1 = 0.0);
  void add_empty_row() { rows_.push_back(Row{}); }

  Index rows() const noexcept { return static_cast<Index>(rows_.size()); }
  Index cols() const noexcept { return cols_; }
  const std::vector<Row>& entries() const noexcept { return rows_; }

  Vector apply(const Vector& z) const;
  Vector apply_transpose(const Vector& y) const;
  /// A^T A with bandwidth min(1, n - 1).
  BandedMatrix gram() const;
  Matrix to_dense() const;

 private:
  Index cols_;
  std::vector<Row> rows_;
};

}  // namespace nsgp

#endif  // NSGP_OBSERVATION_HPP
