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

#include "nsgp/banded.hpp"

#include "nsgp/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nsgp {

namespace {

constexpr double kTinyPivot = 1e-300;
constexpr double kSymmetryTol = 1e-12;

void check_length(const BandedMatrix& m, const Vector& b, const char* what) {
  if (b.size() != m.size()) {
    fail(ErrorCode::kDimensionMismatch,
         std::string(what) + ": vector length " + std::to_string(b.size()) +
             " does not match matrix size " + std::to_string(m.size()));
  }
}

}  // namespace

BandedMatrix::BandedMatrix(Index n, Index lower, Index upper)
    : n_(n), p_(lower), q_(upper) {
  if (n < 1) fail(ErrorCode::kInvalidArgument, "banded matrix needs n >= 1");
  if (lower < 0 || upper < 0 || lower >= n || upper >= n) {
    fail(ErrorCode::kInvalidArgument,
         "bandwidths must satisfy 0 <= p, q < n (n=" + std::to_string(n) +
             ", p=" + std::to_string(lower) + ", q=" + std::to_string(upper) +
             ")");
  }
  bands_.assign(static_cast<std::size_t>((p_ + q_ + 1) * n_), 0.0);
}

BandedMatrix BandedMatrix::identity(Index n) {
  BandedMatrix m(n, 0, 0);
  for (Index i = 0; i < n; ++i) m.ref(i, i) = 1.0;
  return m;
}

BandedMatrix BandedMatrix::diagonal(const Vector& d) {
  BandedMatrix m(d.size(), 0, 0);
  for (Index i = 0; i < d.size(); ++i) m.ref(i, i) = d[i];
  return m;
}

BandedMatrix BandedMatrix::from_dense(const Matrix& dense, Index lower,
                                      Index upper) {
  if (dense.rows() != dense.cols()) {
    fail(ErrorCode::kDimensionMismatch, "from_dense: matrix is not square");
  }
  BandedMatrix m(dense.rows(), lower, upper);
  for (Index j = 0; j < dense.cols(); ++j) {
    for (Index i = 0; i < dense.rows(); ++i) {
      const double v = dense(i, j);
      if (m.in_band(i, j)) {
        m.ref(i, j) = v;
      } else if (v != 0.0) {
        fail(ErrorCode::kOutOfBand, "from_dense: nonzero entry (" +
                                        std::to_string(i) + ", " +
                                        std::to_string(j) + ") outside band");
      }
    }
  }
  return m;
}

double& BandedMatrix::at(Index i, Index j) {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) {
    fail(ErrorCode::kDimensionMismatch, "index out of range");
  }
  if (!in_band(i, j)) {
    fail(ErrorCode::kOutOfBand, "write to (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ") outside band [-" +
                                    std::to_string(p_) + ", " +
                                    std::to_string(q_) + "]");
  }
  return bands_[slot(i, j)];
}

Matrix BandedMatrix::to_dense() const {
  Matrix out = Matrix::Zero(n_, n_);
  for (Index i = 0; i < n_; ++i) {
    const Index j0 = std::max<Index>(0, i - p_);
    const Index j1 = std::min<Index>(n_ - 1, i + q_);
    for (Index j = j0; j <= j1; ++j) out(i, j) = ref(i, j);
  }
  return out;
}

Vector BandedMatrix::multiply(const Vector& x) const {
  check_length(*this, x, "multiply");
  Vector y = Vector::Zero(n_);
  for (Index i = 0; i < n_; ++i) {
    const Index j0 = std::max<Index>(0, i - p_);
    const Index j1 = std::min<Index>(n_ - 1, i + q_);
    double acc = 0.0;
    for (Index j = j0; j <= j1; ++j) acc += ref(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

Vector BandedMatrix::multiply_transpose(const Vector& x) const {
  check_length(*this, x, "multiply_transpose");
  Vector y = Vector::Zero(n_);
  for (Index i = 0; i < n_; ++i) {
    const Index j0 = std::max<Index>(0, i - p_);
    const Index j1 = std::min<Index>(n_ - 1, i + q_);
    for (Index j = j0; j <= j1; ++j) y[j] += ref(i, j) * x[i];
  }
  return y;
}

BandedMatrix& BandedMatrix::add_scaled(const BandedMatrix& other,
                                       double alpha) {
  if (other.n_ != n_) {
    fail(ErrorCode::kDimensionMismatch, "add_scaled: size mismatch");
  }
  if (other.p_ > p_ || other.q_ > q_) {
    fail(ErrorCode::kOutOfBand, "add_scaled: operand band is wider");
  }
  for (Index i = 0; i < n_; ++i) {
    const Index j0 = std::max<Index>(0, i - other.p_);
    const Index j1 = std::min<Index>(n_ - 1, i + other.q_);
    for (Index j = j0; j <= j1; ++j) ref(i, j) += alpha * other.ref(i, j);
  }
  return *this;
}

BandedCholesky::BandedCholesky(const BandedMatrix& spd) {
  if (spd.lower() != spd.upper()) {
    fail(ErrorCode::kBandwidthMismatch,
         "cholesky needs symmetric storage (p == q)");
  }
  const Index n = spd.size();
  const Index p = spd.lower();

  double scale = 0.0;
  for (double v : spd.bands()) scale = std::max(scale, std::abs(v));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j <= std::min<Index>(n - 1, i + p); ++j) {
      if (std::abs(spd.ref(i, j) - spd.ref(j, i)) > kSymmetryTol * scale) {
        fail(ErrorCode::kNotPositiveDefinite,
             "cholesky: matrix is not symmetric at (" + std::to_string(i) +
                 ", " + std::to_string(j) + ")");
      }
    }
  }

  r_ = BandedMatrix(n, p, 0);
  for (Index j = 0; j < n; ++j) {
    const Index k0 = std::max<Index>(0, j - p);
    double s = spd.ref(j, j);
    for (Index k = k0; k < j; ++k) s -= r_.ref(j, k) * r_.ref(j, k);
    if (!(s > 0.0)) {
      fail(ErrorCode::kNotPositiveDefinite,
           "cholesky: non-positive pivot at row " + std::to_string(j));
    }
    const double rjj = std::sqrt(s);
    r_.ref(j, j) = rjj;
    for (Index i = j + 1; i <= std::min<Index>(n - 1, j + p); ++i) {
      double t = spd.ref(i, j);
      for (Index k = std::max<Index>(0, i - p); k < j; ++k) {
        t -= r_.ref(i, k) * r_.ref(j, k);
      }
      r_.ref(i, j) = t / rjj;
    }
  }
}

double BandedCholesky::logdet() const {
  double acc = 0.0;
  for (Index i = 0; i < r_.size(); ++i) acc += std::log(r_.ref(i, i));
  return 2.0 * acc;
}

Vector BandedCholesky::solve_lower(const Vector& b) const {
  check_length(r_, b, "cholesky solve");
  const Index n = r_.size();
  const Index p = r_.lower();
  Vector x(n);
  for (Index i = 0; i < n; ++i) {
    double t = b[i];
    for (Index k = std::max<Index>(0, i - p); k < i; ++k) {
      t -= r_.ref(i, k) * x[k];
    }
    x[i] = t / r_.ref(i, i);
  }
  return x;
}

Vector BandedCholesky::solve_upper(const Vector& b) const {
  check_length(r_, b, "cholesky solve");
  const Index n = r_.size();
  const Index p = r_.lower();
  Vector x(n);
  for (Index i = n - 1; i >= 0; --i) {
    double t = b[i];
    for (Index k = i + 1; k <= std::min<Index>(n - 1, i + p); ++k) {
      t -= r_.ref(k, i) * x[k];
    }
    x[i] = t / r_.ref(i, i);
  }
  return x;
}

BandedLU::BandedLU(const BandedMatrix& m) : lu_(m) {
  const Index n = lu_.size();
  const Index p = lu_.lower();
  const Index q = lu_.upper();
  for (Index k = 0; k < n; ++k) {
    const double pivot = lu_.ref(k, k);
    if (!(std::abs(pivot) >= kTinyPivot)) {
      fail(ErrorCode::kSingular,
           "banded LU: pivot underflow at row " + std::to_string(k));
    }
    const Index i1 = std::min<Index>(n - 1, k + p);
    const Index j1 = std::min<Index>(n - 1, k + q);
    for (Index i = k + 1; i <= i1; ++i) {
      const double l = lu_.ref(i, k) / pivot;
      lu_.ref(i, k) = l;
      if (l == 0.0) continue;
      for (Index j = k + 1; j <= j1; ++j) lu_.ref(i, j) -= l * lu_.ref(k, j);
    }
  }
}

Vector BandedLU::solve(const Vector& b) const {
  check_length(lu_, b, "banded solve");
  const Index n = lu_.size();
  const Index p = lu_.lower();
  const Index q = lu_.upper();
  Vector x = b;
  for (Index i = 0; i < n; ++i) {
    for (Index k = std::max<Index>(0, i - p); k < i; ++k) {
      x[i] -= lu_.ref(i, k) * x[k];
    }
  }
  for (Index i = n - 1; i >= 0; --i) {
    for (Index k = i + 1; k <= std::min<Index>(n - 1, i + q); ++k) {
      x[i] -= lu_.ref(i, k) * x[k];
    }
    x[i] /= lu_.ref(i, i);
  }
  return x;
}

double BandedLU::log_abs_det() const {
  double acc = 0.0;
  for (Index i = 0; i < lu_.size(); ++i) acc += std::log(std::abs(lu_.ref(i, i)));
  return acc;
}

BandedMatrix banded_cholesky(const BandedMatrix& m) {
  return BandedCholesky(m).factor();
}

Vector solve_banded(const BandedMatrix& m, const Vector& b) {
  return BandedLU(m).solve(b);
}

double logdet_banded(const BandedMatrix& m) { return BandedLU(m).log_abs_det(); }

double logdet_spd(const BandedMatrix& m) { return BandedCholesky(m).logdet(); }

BandedMatrix normal_form(const BandedMatrix& l) {
  const Index n = l.size();
  const Index p = l.lower();
  const Index q = l.upper();
  const Index w = std::min<Index>(n - 1, p + q);
  BandedMatrix out(n, w, w);
  // Row k of L contributes L(k,i) L(k,j) to (i, j) for every i, j in its band.
  for (Index k = 0; k < n; ++k) {
    const Index c0 = std::max<Index>(0, k - p);
    const Index c1 = std::min<Index>(n - 1, k + q);
    for (Index i = c0; i <= c1; ++i) {
      const double lki = l.ref(k, i);
      if (lki == 0.0) continue;
      for (Index j = i; j <= c1; ++j) out.ref(i, j) += lki * l.ref(k, j);
    }
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j <= std::min<Index>(n - 1, i + w); ++j) {
      out.ref(j, i) = out.ref(i, j);
    }
  }
  return out;
}

Vector sample_from_precision(const BandedMatrix& precision, const Vector& b,
                             const Vector& noise) {
  check_length(precision, noise, "sample_from_precision");
  const BandedCholesky chol(precision);
  // mu + R^{-T} eta = R^{-T} (R^{-1} b + eta)
  return chol.solve_upper(chol.solve_lower(b) + noise);
}

}  // namespace nsgp
