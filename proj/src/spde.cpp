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

#include "nsgp/spde.hpp"

#include "nsgp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace nsgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct StencilRow {
  double lower;
  double diag;
  double upper;
};

// Row j of L before corner truncation.
StencilRow stencil_row(double u_j, const SpdeConfig& cfg, double c_w) {
  const double ell = std::exp(u_j);
  const double c = ell * ell / (cfg.h * cfg.h);
  const double s = std::sqrt(cfg.h) / (cfg.tau * c_w * std::sqrt(ell));
  return {-s * c, s * (1.0 + 2.0 * c), -s * c};
}

void check_field(const Vector& u, const SpdeConfig& cfg) {
  if (u.size() != cfg.n) {
    fail(ErrorCode::kDimensionMismatch,
         "length-scale field has " + std::to_string(u.size()) +
             " entries, grid has " + std::to_string(cfg.n));
  }
  if (!u.allFinite()) {
    fail(ErrorCode::kInvalidArgument, "length-scale field is not finite");
  }
}

// Posterior precision L^T L + A^T A / s2 with a band wide enough for both.
BandedMatrix posterior_precision(const BandedMatrix& q, const BandedMatrix& gram,
                                 double sigma2) {
  const Index w = std::max(q.lower(), gram.lower());
  BandedMatrix p(q.size(), w, w);
  p.add_scaled(q, 1.0);
  p.add_scaled(gram, 1.0 / sigma2);
  return p;
}

void check_sigma2(double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    fail(ErrorCode::kNotPositiveDefinite,
         "noise variance must be positive, got " + std::to_string(sigma2));
  }
}

}  // namespace

double SpdeConfig::white_noise_scale() const {
  constexpr double d = 1.0;
  const double var = std::tgamma(nu + d / 2.0) *
                     std::pow(4.0 * std::numbers::pi, d / 2.0) / std::tgamma(nu);
  return std::sqrt(var);
}

void SpdeConfig::validate() const {
  if (!(h > 0.0)) fail(ErrorCode::kConfigError, "grid step must be positive");
  if (n < 5) fail(ErrorCode::kConfigError, "grid needs at least 5 nodes");
  if (n_ext < 0) fail(ErrorCode::kConfigError, "extension must be non-negative");
  if (!(tau > 0.0)) fail(ErrorCode::kConfigError, "tau must be positive");
  if (nu != 1.5) {
    fail(ErrorCode::kConfigError, "only nu = 3/2 has a 1-D difference stencil");
  }
}

BandedMatrix build_L(const Vector& u, const SpdeConfig& cfg) {
  check_field(u, cfg);
  const Index n = cfg.n;
  const double c_w = cfg.white_noise_scale();
  BandedMatrix l(n, std::min<Index>(1, n - 1), std::min<Index>(1, n - 1));
  for (Index j = 0; j < n; ++j) {
    const StencilRow r = stencil_row(u[j], cfg, c_w);
    l.ref(j, j) = r.diag;
    if (j > 0) l.ref(j, j - 1) = r.lower;
    if (j + 1 < n) l.ref(j, j + 1) = r.upper;
  }
  return l;
}

BandedMatrix precision(const Vector& u, const SpdeConfig& cfg) {
  return normal_form(build_L(u, cfg));
}

double log_abs_det_L(const Vector& u, const SpdeConfig& cfg) {
  check_field(u, cfg);
  const double c_w = cfg.white_noise_scale();
  // Pivots of the unpivoted tridiagonal LU.
  double acc = 0.0;
  double prev_pivot = 0.0;
  double prev_upper = 0.0;
  for (Index j = 0; j < cfg.n; ++j) {
    const StencilRow r = stencil_row(u[j], cfg, c_w);
    const double pivot = j == 0 ? r.diag : r.diag - r.lower * prev_upper / prev_pivot;
    acc += std::log(std::abs(pivot));
    prev_pivot = pivot;
    prev_upper = r.upper;
  }
  return acc;
}

double logratio_prior_z_site(const Vector& z, const Vector& u, Index k,
                             double u_k_new, const SpdeConfig& cfg,
                             double logdet_old, double* logdet_new) {
  if (k < 0 || k >= cfg.n) fail(ErrorCode::kDimensionMismatch, "site out of range");
  if (z.size() != cfg.n) fail(ErrorCode::kDimensionMismatch, "latent length mismatch");
  const double c_w = cfg.white_noise_scale();
  auto row_dot = [&](double u_k) {
    const StencilRow r = stencil_row(u_k, cfg, c_w);
    double v = r.diag * z[k];
    if (k > 0) v += r.lower * z[k - 1];
    if (k + 1 < cfg.n) v += r.upper * z[k + 1];
    return v;
  };
  const double old_row = row_dot(u[k]);
  const double new_row = row_dot(u_k_new);

  Vector u_new = u;
  u_new[k] = u_k_new;
  const double ld_new = log_abs_det_L(u_new, cfg);
  if (logdet_new != nullptr) *logdet_new = ld_new;
  return (ld_new - logdet_old) - 0.5 * (new_row * new_row - old_row * old_row);
}

double logratio_prior_z(const Vector& z, const Vector& u_new,
                        const Vector& u_old, const SpdeConfig& cfg) {
  check_field(u_new, cfg);
  check_field(u_old, cfg);
  Index site = -1;
  for (Index j = 0; j < cfg.n; ++j) {
    if (u_new[j] != u_old[j]) {
      if (site >= 0) {
        fail(ErrorCode::kMultiSiteDiff,
             "length-scale fields differ in more than one coordinate");
      }
      site = j;
    }
  }
  if (site < 0) return 0.0;
  return logratio_prior_z_site(z, u_old, site, u_new[site], cfg,
                               log_abs_det_L(u_old, cfg), nullptr);
}

double log_prior_z(const Vector& z, const BandedMatrix& l) {
  const Vector lz = l.multiply(z);
  return -0.5 * static_cast<double>(z.size()) * kLog2Pi + logdet_banded(l) -
         0.5 * lz.squaredNorm();
}

double stat_matern(double r, double lambda, double tau, double nu) {
  const double tau2 = tau * tau;
  if (r <= 0.0) return tau2;
  const double x = r / lambda;
  if (nu == 0.5) return tau2 * std::exp(-x);
  if (nu == 1.5) return tau2 * (1.0 + x) * std::exp(-x);
  if (nu == 2.5) return tau2 * (1.0 + x + x * x / 3.0) * std::exp(-x);
  return tau2 * std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(x, nu) *
         std::cyl_bessel_k(nu, x);
}

double se_cov(double r, double lambda, double tau) {
  return tau * tau * std::exp(-r * r / (2.0 * lambda * lambda));
}

double ns_matern(double x_i, double x_j, double ell_i, double ell_j, double tau,
                 double nu) {
  const double s = 0.5 * (ell_i + ell_j);
  const double d = x_i - x_j;
  const double q = d * d / s;
  const double prefactor =
      tau * tau * std::pow(ell_i, 0.25) * std::pow(ell_j, 0.25) / std::sqrt(s);
  const double arg = 2.0 * std::sqrt(nu * q);
  if (arg == 0.0) return prefactor;
  // Unit-variance Matern correlation evaluated at 2 sqrt(nu Q).
  return prefactor * stat_matern(arg, 1.0, 1.0, nu);
}

double ns_matern(double x_i, double x_j,
                 const std::function<double(double)>& ell, double tau,
                 double nu) {
  return ns_matern(x_i, x_j, ell(x_i), ell(x_j), tau, nu);
}

Vector sample_latent_from_factor(const BandedMatrix& l, double sigma2,
                                 const ObservationOperator& a, const Vector& y,
                                 const Vector& noise) {
  check_sigma2(sigma2);
  if (a.cols() != l.size() || a.rows() != y.size()) {
    fail(ErrorCode::kDimensionMismatch, "sample_latent: A, y, L disagree");
  }
  const BandedMatrix p = posterior_precision(normal_form(l), a.gram(), sigma2);
  return sample_from_precision(p, a.apply_transpose(y) / sigma2, noise);
}

Vector sample_latent(const Vector& u, double sigma2, const ObservationOperator& a,
                     const Vector& y, const Vector& noise, const SpdeConfig& cfg) {
  return sample_latent_from_factor(build_L(u, cfg), sigma2, a, y, noise);
}

namespace {

double marginal_core(const BandedMatrix& l, double sigma2, const BandedMatrix& gram,
                     const Vector& aty, double yty, Index m) {
  check_sigma2(sigma2);
  const BandedMatrix p = posterior_precision(normal_form(l), gram, sigma2);
  const BandedCholesky chol(p);
  // y^T Psi^{-1} y = y^T y / s2 - aty^T P^{-1} aty / s2^2
  const Vector half = chol.solve_lower(aty);
  const double quad = yty / sigma2 - half.squaredNorm() / (sigma2 * sigma2);
  const double logdet_psi = chol.logdet() - 2.0 * logdet_banded(l) +
                            static_cast<double>(m) * std::log(sigma2);
  return -0.5 * static_cast<double>(m) * kLog2Pi - 0.5 * logdet_psi - 0.5 * quad;
}

double marginal_dense_schur(const BandedMatrix& l, double sigma2,
                            const ObservationOperator& a, const Vector& y) {
  check_sigma2(sigma2);
  const Index m = a.rows();
  const Index n = a.cols();
  const BandedMatrix p = posterior_precision(normal_form(l), a.gram(), sigma2);
  const BandedCholesky chol(p);
  const Matrix at = a.to_dense().transpose();
  Matrix b(n, m);
  for (Index c = 0; c < m; ++c) b.col(c) = chol.solve(at.col(c));
  Matrix psi_inv = Matrix::Identity(m, m) / sigma2;
  for (Index r = 0; r < m; ++r) {
    const auto& e = a.entries()[static_cast<std::size_t>(r)];
    if (e.col < 0) continue;
    Eigen::RowVectorXd ab = e.w0 * b.row(e.col);
    if (e.w1 != 0.0) ab += e.w1 * b.row(e.col + 1);
    psi_inv.row(r) -= ab / (sigma2 * sigma2);
  }
  psi_inv = 0.5 * (psi_inv + psi_inv.transpose()).eval();
  const Eigen::LLT<Matrix> llt(psi_inv);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::kNotPositiveDefinite, "inverse marginal covariance is not SPD");
  }
  const double logdet_psi_inv =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double quad = y.dot(psi_inv * y);
  return -0.5 * static_cast<double>(m) * kLog2Pi + 0.5 * logdet_psi_inv - 0.5 * quad;
}

}  // namespace

double marginal_loglik_from_factor(const BandedMatrix& l, double sigma2,
                                   const ObservationOperator& a, const Vector& y,
                                   DeterminantRoute route) {
  if (a.cols() != l.size() || a.rows() != y.size()) {
    fail(ErrorCode::kDimensionMismatch, "marginal_loglik: A, y, L disagree");
  }
  if (route == DeterminantRoute::kDenseSchur) {
    return marginal_dense_schur(l, sigma2, a, y);
  }
  return marginal_core(l, sigma2, a.gram(), a.apply_transpose(y), y.squaredNorm(),
                       a.rows());
}

double marginal_loglik(const Vector& u, double sigma2, const ObservationOperator& a,
                       const Vector& y, const SpdeConfig& cfg,
                       DeterminantRoute route) {
  return marginal_loglik_from_factor(build_L(u, cfg), sigma2, a, y, route);
}

MarginalLikelihood::MarginalLikelihood(const ObservationOperator& a,
                                       const Vector& y, const SpdeConfig& cfg)
    : a_(a), cfg_(cfg), gram_(a.gram()) {
  if (a.cols() != cfg.n) {
    fail(ErrorCode::kDimensionMismatch, "observation operator / grid mismatch");
  }
  set_data(y);
}

void MarginalLikelihood::set_data(const Vector& y) {
  if (y.size() != a_.rows()) {
    fail(ErrorCode::kDimensionMismatch, "data length does not match A");
  }
  aty_ = a_.apply_transpose(y);
  yty_ = y.squaredNorm();
  m_ = y.size();
}

double MarginalLikelihood::operator()(const Vector& u, double sigma2) const {
  return from_factor(build_L(u, cfg_), sigma2);
}

double MarginalLikelihood::from_factor(const BandedMatrix& l, double sigma2) const {
  return marginal_core(l, sigma2, gram_, aty_, yty_, m_);
}

double gaussian_loglik(const Vector& y, const Vector& mean, double sigma2) {
  if (y.size() != mean.size()) {
    fail(ErrorCode::kDimensionMismatch, "gaussian_loglik: length mismatch");
  }
  const double m = static_cast<double>(y.size());
  return -0.5 * m * (kLog2Pi + std::log(sigma2)) -
         0.5 * (y - mean).squaredNorm() / sigma2;
}

}  // namespace nsgp
