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

#ifndef NSGP_ADDITIVE_HPP
#define NSGP_ADDITIVE_HPP

#include "nsgp/experiments.hpp"
#include "nsgp/samplers.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace nsgp {

enum class CellKind : std::uint8_t { kObserved, kMissing, kExtension };

/// Complete n1 x n2 computational grid; cell (i1, i2) has index i1 n2 + i2.
struct Grid2D {
  Grid1D axis1;
  Grid1D axis2;
  std::vector<CellKind> kind;  // per cell
  std::vector<Index> data_row;  // per cell, -1 when absent from the input

  Index n1() const { return axis1.n; }
  Index n2() const { return axis2.n; }
  Index cells() const { return axis1.n * axis2.n; }
  Index cell(Index i1, Index i2) const { return i1 * axis2.n + i2; }
  Index count(CellKind k) const;
};

/// Places the rows of a 2-D data set on an equispaced grid per axis and
/// pads each axis with `ext1` / `ext2` nodes. Locations must sit on grid
/// nodes; grid nodes absent from the data become missing cells.
Grid2D build_grid_2d(const Vector& x1, const Vector& x2,
                     const std::vector<std::uint8_t>& missing, Index ext1, Index ext2);

/// Observations arranged on the modeled cells: every non-extension cell,
/// plus the extension cells when the interaction term is on (which makes
/// the interaction selection matrix the identity).
struct AdditiveData {
  Grid2D grid;
  std::vector<Index> row_cell;
  std::vector<std::uint8_t> row_imputed;  // 1 for missing and extension rows
  Vector y;  // observed values; imputed rows hold their current draw
  ObservationOperator a1{1};
  ObservationOperator a2{1};
  bool interaction = false;

  Index rows() const { return static_cast<Index>(row_cell.size()); }
};

AdditiveData make_additive_data(const Grid2D& grid, const Vector& y_by_data_row,
                                bool interaction);

struct KroneckerEigen {
  Matrix e3;
  Vector lambda3;
  Matrix e4;
  Vector lambda4;
};

KroneckerEigen kronecker_eigen(const BandedMatrix& q3, const BandedMatrix& q4);

/// (E3 kron E4) alpha = vec(E4 reshape(alpha, n2, n1) E3^T), column-major.
Vector kron_mv(const Matrix& e3, const Matrix& e4, const Vector& alpha);

/// Draw from N(mu, (Q3 kron Q4 + I / s2)^{-1}) with mu = the covariance times
/// y / s2. A zero `noise` yields the mean.
Vector z3_posterior_draw(const KroneckerEigen& eig, double sigma2, const Vector& y,
                         const Vector& noise);

/// log N(y | 0, A Q_u^{-1} A^T + s2 I) for one additive component.
double block_marginal_loglik_1d(const Vector& u, double sigma2,
                                const ObservationOperator& a, const Vector& y,
                                const SpdeConfig& cfg);

/// log N(y | 0, Q3^{-1} kron Q4^{-1} + s2 I) on the complete grid.
double block_marginal_loglik_interaction(const KroneckerEigen& eig, double sigma2,
                                         const Vector& y);

struct Model2D {
  SpdeConfig spde1;
  SpdeConfig spde2;
  HyperpriorSpec prior;  // kind, tau_ell, mu_ell shared by all four fields
  GaussianPrior log_lambda{0.0, 3.0};
  GaussianPrior log_sigma2{0.0, 10.0};
  bool interaction = false;

  /// Axis 0, 1 are the first-order fields; 2, 3 the interaction factors.
  const SpdeConfig& spde(int field) const { return field % 2 == 0 ? spde1 : spde2; }
  HyperpriorSpec prior_at(int field, double log_lambda) const;
  void validate() const;
};

struct AdditiveState {
  Vector z1;
  Vector z2;
  Vector z3;  // empty without interaction
  std::array<Vector, 4> zeta;
  std::array<Vector, 4> u;
  std::array<double, 4> log_lambda{};
  double log_sigma2 = 0.0;
  AdaptiveScale sigma2_scale;
  std::array<AdaptiveScale, 4> lambda_scale;

  double sigma2() const { return std::exp(log_sigma2); }
  Vector fitted(const AdditiveData& data) const;
};

Vector field_from_state_2d(const Model2D& model, int field, const Vector& zeta,
                           double log_lambda);

AdditiveState initial_state_2d(const AdditiveData& data, const Model2D& model,
                               const SamplerSettings& settings);

/// Redraws every imputed row from N(fitted, s2).
void impute_missing(AdditiveState& state, AdditiveData& data, Rng& rng);

void block_mellss_iteration(AdditiveState& state, AdditiveData& data,
                            const Model2D& model, const SamplerSettings& settings,
                            Rng& rng);

struct Welford {
  Vector mean;
  Vector m2;
  Index count = 0;

  void add(const Vector& x);
  Vector sd() const;
};

struct Trace2D {
  Index iterations = 0;
  Index burnin = 0;
  Index thin = 1;
  Matrix z1;  // centred, one row per kept sample
  Matrix z2;
  std::vector<double> intercept;
  std::array<std::vector<double>, 4> lambda;
  std::vector<double> sigma2;
  Matrix u1;
  Matrix u2;
  /// Fitted values on the modeled non-extension rows. Stored in full when
  /// small enough, summarized always.
  Matrix fitted;
  Welford fitted_summary;
  Welford z3_summary;
  std::vector<Index> fitted_cells;
  double burn_seconds = 0.0;
  double kept_seconds = 0.0;
  double accept_sigma2 = 0.0;
  std::array<double, 4> accept_lambda{};

  Index samples() const { return static_cast<Index>(sigma2.size()); }
};

/// Upper bound on stored fitted-value entries (samples x cells).
inline constexpr Index kMaxStoredFitted = 20'000'000;

Trace2D run_chain_2d(const AdditiveData& data, const Model2D& model,
                     const SamplerSettings& settings, std::uint64_t seed);

}  // namespace nsgp

#endif  // NSGP_ADDITIVE_HPP
