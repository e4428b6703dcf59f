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

#ifndef NSGP_HYPERPRIOR_HPP
#define NSGP_HYPERPRIOR_HPP

#include "nsgp/banded.hpp"

#include <memory>
#include <mutex>
#include <string>

namespace nsgp {

enum class HyperpriorKind { kAr1, kSe, kConst };

const char* hyperprior_name(HyperpriorKind kind) noexcept;
HyperpriorKind parse_hyperprior(const std::string& name);

/// Gaussian prior on the log length-scale field u. For kConst the field is
/// pinned at log(lambda) everywhere and has no whitened coordinates.
struct HyperpriorSpec {
  HyperpriorKind kind = HyperpriorKind::kAr1;
  double lambda = 1.0;
  double tau_ell = 1.0;
  double mu_ell = 0.0;
  double h = 1.0;
  Index n = 0;

  void validate() const;
  HyperpriorSpec with_lambda(double new_lambda) const;
};

struct Ar1Coefficients {
  double a0 = 0.0;
  double a1 = 0.0;
  /// Lag-one autocorrelation -a1/a0.
  double beta() const { return -a1 / a0; }
};

Ar1Coefficients ar1_coefficients(double h, double lambda, double tau_ell);

/// Upper bidiagonal factor with diagonal (a0, ..., a0, 1) and superdiagonal
/// a1; its normal form is the AR(1) precision.
BandedMatrix ar1_factor(const HyperpriorSpec& spec);

/// Dense squared-exponential covariance on the grid, no jitter.
Matrix se_covariance(const HyperpriorSpec& spec);

/// Factorization of the jittered SE covariance, shared through a small
/// process-wide cache keyed by (n, h, lambda, tau_ell).
class SeFactor {
 public:
  explicit SeFactor(const HyperpriorSpec& spec);

  /// Lower-triangular R with R R^T = C + jitter I.
  const Matrix& chol() const noexcept { return chol_; }
  double jitter() const noexcept { return jitter_; }
  double logdet() const noexcept { return logdet_; }
  /// (C + jitter I)^{-1}, built on first use.
  const Matrix& precision() const;

 private:
  Matrix chol_;
  double jitter_ = 0.0;
  double logdet_ = 0.0;
  mutable std::once_flag precision_once_;
  mutable Matrix precision_;
};

std::shared_ptr<const SeFactor> se_factor(const HyperpriorSpec& spec);
Matrix se_chol(const HyperpriorSpec& spec);

/// u = R zeta + mu, with R = L(phi)^{-1} for AR(1) and chol(C) for SE.
Vector unwhiten(const HyperpriorSpec& spec, const Vector& zeta);
/// Inverse of unwhiten.
Vector whiten(const HyperpriorSpec& spec, const Vector& u);

/// The pinned field of a kConst prior.
Vector constant_field(const HyperpriorSpec& spec);

double logpdf_u(const HyperpriorSpec& spec, const Vector& u);

/// logpdf_u with u_k replaced by u_k_new minus logpdf_u at u. O(1) for
/// AR(1), O(n) for SE.
double logratio_u_site(const HyperpriorSpec& spec, const Vector& u, Index k,
                       double u_k_new);

/// logpdf_u(spec_new, u) - logpdf_u(spec_old, u) for specs that differ only
/// in lambda.
double logratio_lambda(const HyperpriorSpec& spec_new,
                       const HyperpriorSpec& spec_old, const Vector& u);

struct ElicitedPrior {
  double mu_ell = 0.0;
  double tau_ell = 1.0;
};

/// Places the central 95% of exp(u) between the smallest and largest
/// covariate distances.
ElicitedPrior elicit_prior(double min_distance, double max_distance);

}  // namespace nsgp

#endif  // NSGP_HYPERPRIOR_HPP
