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

#ifndef NSGP_SPDE_HPP
#define NSGP_SPDE_HPP

#include "nsgp/banded.hpp"
#include "nsgp/observation.hpp"

#include <functional>

namespace nsgp {

/// Discretization of (1 - l(x)^2 d^2/dx^2) z = tau sqrt(l(x)) w on a uniform
/// grid. The smoothness is fixed at nu = 3/2, the only value for which the
/// 1-D operator is a second-order difference stencil.
struct SpdeConfig {
  Index n = 0;        // grid size, extension included
  double h = 1.0;     // grid step in input units
  Index n_ext = 0;    // extension nodes per side
  double tau = 1.0;   // field magnitude
  double nu = 1.5;

  /// sqrt(Var(w)) = sqrt(Gamma(nu + d/2) (4 pi)^{d/2} / Gamma(nu)); 2 at nu = 3/2, d = 1.
  double white_noise_scale() const;
  void validate() const;
};

/// Log length-scale field u = log l on the computational grid.
struct LengthScaleField {
  Vector u;
  double mu_ell = 0.0;
  double tau_ell = 1.0;
  double h = 1.0;

  Vector ell() const { return u.array().exp(); }
};

/// Tridiagonal factor L(u). Row j is s_j [-l_j^2/h^2, 1 + 2 l_j^2/h^2, -l_j^2/h^2]
/// with s_j = sqrt(h) / (tau c_w sqrt(l_j)); the first and last rows drop the
/// neighbour that falls off the grid.
BandedMatrix build_L(const Vector& u, const SpdeConfig& cfg);

/// Q_u = L(u)^T L(u), pentadiagonal.
BandedMatrix precision(const Vector& u, const SpdeConfig& cfg);

/// log |det L(u)| in O(n) without materializing L.
double log_abs_det_L(const Vector& u, const SpdeConfig& cfg);

/// log N(z | 0, Q_new^{-1}) - log N(z | 0, Q_old^{-1}) where u_new and u_old
/// differ in at most one coordinate. Throws kMultiSiteDiff otherwise.
double logratio_prior_z(const Vector& z, const Vector& u_new,
                        const Vector& u_old, const SpdeConfig& cfg);

/// Single-site form used inside Metropolis-within-Gibbs sweeps. Only row k of
/// L changes, so the quadratic term is O(1); `logdet_old` is log|det L(u)|
/// and the updated log-determinant is written to `logdet_new`.
double logratio_prior_z_site(const Vector& z, const Vector& u, Index k,
                             double u_k_new, const SpdeConfig& cfg,
                             double logdet_old, double* logdet_new);

/// log N(z | 0, (L^T L)^{-1}).
double log_prior_z(const Vector& z, const BandedMatrix& l);

/// Stationary Matern covariance tau^2 2^{1-nu}/Gamma(nu) (r/lambda)^nu K_nu(r/lambda).
double stat_matern(double r, double lambda, double tau, double nu);

/// Squared exponential tau^2 exp(-r^2 / (2 lambda^2)).
double se_cov(double r, double lambda, double tau);

/// Non-stationary Matern covariance for scalar kernels: with S = (l_i + l_j)/2
/// and Q = (x_i - x_j)^2 / S,
///   tau^2 l_i^{1/4} l_j^{1/4} / (Gamma(nu) 2^{nu-1} S^{1/2}) (2 sqrt(nu Q))^nu K_nu(2 sqrt(nu Q)).
double ns_matern(double x_i, double x_j, double ell_i, double ell_j, double tau,
                 double nu);
double ns_matern(double x_i, double x_j,
                 const std::function<double(double)>& ell, double tau,
                 double nu);

/// Draw from N(mu, Sigma) with Sigma = (L^T L + A^T A / s2)^{-1} and
/// mu = Sigma A^T y / s2. A zero `noise` yields the posterior mean.
Vector sample_latent_from_factor(const BandedMatrix& l, double sigma2,
                                 const ObservationOperator& a, const Vector& y,
                                 const Vector& noise);
Vector sample_latent(const Vector& u, double sigma2, const ObservationOperator& a,
                     const Vector& y, const Vector& noise, const SpdeConfig& cfg);

enum class DeterminantRoute {
  /// log det Psi = log det(Q + A^T A / s2) - log det Q + m log s2. O(n).
  kDeterminantLemma,
  /// Solve (Q + A^T A / s2) B = A^T, form the m x m inverse of Psi and take
  /// its dense determinant. O(nm + m^3); kept as an independent check.
  kDenseSchur,
};

/// log N(y | 0, A Q^{-1} A^T + s2 I) through the Woodbury identity; the
/// m x m covariance is never formed on the default route.
double marginal_loglik_from_factor(
    const BandedMatrix& l, double sigma2, const ObservationOperator& a,
    const Vector& y, DeterminantRoute route = DeterminantRoute::kDeterminantLemma);
double marginal_loglik(const Vector& u, double sigma2,
                       const ObservationOperator& a, const Vector& y,
                       const SpdeConfig& cfg,
                       DeterminantRoute route = DeterminantRoute::kDeterminantLemma);

/// Reusable evaluator: caches A^T A, A^T y and y^T y for repeated calls with
/// fixed data.
class MarginalLikelihood {
 public:
  MarginalLikelihood(const ObservationOperator& a, const Vector& y,
                     const SpdeConfig& cfg);

  double operator()(const Vector& u, double sigma2) const;
  double from_factor(const BandedMatrix& l, double sigma2) const;

  /// Replaces the data vector, keeping A.
  void set_data(const Vector& y);

 private:
  ObservationOperator a_;
  SpdeConfig cfg_;
  BandedMatrix gram_;
  Vector aty_;
  double yty_ = 0.0;
  Index m_ = 0;
};

/// Sum of log N(y_i | mean_i, s2).
double gaussian_loglik(const Vector& y, const Vector& mean, double sigma2);

}  // namespace nsgp

#endif  // NSGP_SPDE_HPP
