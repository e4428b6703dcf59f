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

#ifndef NSGP_BANDED_HPP
#define NSGP_BANDED_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace nsgp {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Square matrix stored by diagonals.
///
/// Entry (i, j) lives on diagonal offset k = j - i, with -p <= k <= q. Each
/// diagonal occupies one contiguous column of length n indexed by row, so the
/// storage is (p + q + 1) * n doubles; slots that fall outside the matrix are
/// kept at zero. Writes outside the band throw kOutOfBand.
class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(Index n, Index lower, Index upper);

  static BandedMatrix identity(Index n);
  static BandedMatrix diagonal(const Vector& d);
  /// Copies the band of `dense`; entries outside it must be exactly zero.
  static BandedMatrix from_dense(const Matrix& dense, Index lower, Index upper);

  Index size() const noexcept { return n_; }
  Index lower() const noexcept { return p_; }
  Index upper() const noexcept { return q_; }

  bool in_band(Index i, Index j) const noexcept {
    return j - i >= -p_ && j - i <= q_;
  }

  /// Zero outside the band.
  double operator()(Index i, Index j) const noexcept {
    return in_band(i, j) ? bands_[slot(i, j)] : 0.0;
  }
  double& at(Index i, Index j);
  void set(Index i, Index j, double value) { at(i, j) = value; }

  /// Unchecked access; (i, j) must be in the band.
  double& ref(Index i, Index j) noexcept { return bands_[slot(i, j)]; }
  double ref(Index i, Index j) const noexcept { return bands_[slot(i, j)]; }

  std::span<const double> bands() const noexcept { return bands_; }

  Matrix to_dense() const;
  Vector multiply(const Vector& x) const;
  Vector multiply_transpose(const Vector& x) const;

  /// this += alpha * other. Other's band must fit inside this one.
  BandedMatrix& add_scaled(const BandedMatrix& other, double alpha);

 private:
  std::size_t slot(Index i, Index j) const noexcept {
    return static_cast<std::size_t>((j - i + p_) * n_ + i);
  }

  Index n_ = 0;
  Index p_ = 0;
  Index q_ = 0;
  std::vector<double> bands_;
};

/// Lower-triangular banded Cholesky factor R with M = R R^T.
class BandedCholesky {
 public:
  explicit BandedCholesky(const BandedMatrix& spd);

  const BandedMatrix& factor() const noexcept { return r_; }
  Index size() const noexcept { return r_.size(); }

  /// log det M = 2 sum log R_ii.
  double logdet() const;
  /// Solves R x = b.
  Vector solve_lower(const Vector& b) const;
  /// Solves R^T x = b.
  Vector solve_upper(const Vector& b) const;
  /// Solves M x = b.
  Vector solve(const Vector& b) const { return solve_upper(solve_lower(b)); }

 private:
  BandedMatrix r_;
};

/// Pivot-free banded LU. Fill stays inside the original (p, q) band.
class BandedLU {
 public:
  explicit BandedLU(const BandedMatrix& m);

  Vector solve(const Vector& b) const;
  double log_abs_det() const;

 private:
  BandedMatrix lu_;
};

/// Throws kBandwidthMismatch when q != p, kNotPositiveDefinite on a
/// non-positive pivot.
BandedMatrix banded_cholesky(const BandedMatrix& m);

Vector solve_banded(const BandedMatrix& m, const Vector& b);

/// log |det M| through the pivot-free LU.
double logdet_banded(const BandedMatrix& m);

/// log det M for SPD M through the Cholesky diagonal.
double logdet_spd(const BandedMatrix& m);

/// L^T L, with both bandwidths p + q (clamped to n - 1).
BandedMatrix normal_form(const BandedMatrix& l);

/// Returns mu + R^{-T} noise where P = R R^T and P mu = b. With `noise`
/// standard normal the result is distributed N(P^{-1} b, P^{-1}).
Vector sample_from_precision(const BandedMatrix& precision, const Vector& b,
                             const Vector& noise);

}  // namespace nsgp

#endif  // NSGP_BANDED_HPP
