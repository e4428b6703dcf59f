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

#include "nsgp/hyperprior.hpp"

#include "nsgp/error.hpp"

#include <cmath>
#include <deque>
#include <map>
#include <shared_mutex>
#include <tuple>

namespace nsgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-6;
constexpr std::size_t kSeCacheCapacity = 16;

void require_kind(const HyperpriorSpec& spec, HyperpriorKind kind,
                  const char* what) {
  if (spec.kind != kind) {
    fail(ErrorCode::kWrongKind, std::string(what) + " needs a " +
                                    hyperprior_name(kind) + " hyperprior, got " +
                                    hyperprior_name(spec.kind));
  }
}

void require_whitenable(const HyperpriorSpec& spec, const char* what) {
  if (spec.kind == HyperpriorKind::kConst) {
    fail(ErrorCode::kWrongKind,
         std::string(what) + " is undefined for a constant length-scale");
  }
}

void require_length(const HyperpriorSpec& spec, const Vector& v) {
  if (v.size() != spec.n) {
    fail(ErrorCode::kDimensionMismatch,
         "field length " + std::to_string(v.size()) + " does not match grid " +
             std::to_string(spec.n));
  }
}

// Lv for the upper bidiagonal AR(1) factor, row i.
double ar1_row(const Ar1Coefficients& c, const Vector& v, Index i) {
  const Index n = v.size();
  if (i == n - 1) return v[i];
  return c.a0 * v[i] + c.a1 * v[i + 1];
}

using SeKey = std::tuple<Index, double, double, double>;

class SeCache {
 public:
  std::shared_ptr<const SeFactor> get(const HyperpriorSpec& spec) {
    const SeKey key{spec.n, spec.h, spec.lambda, spec.tau_ell};
    {
      std::shared_lock lock(mutex_);
      auto it = entries_.find(key);
      if (it != entries_.end()) return it->second;
    }
    auto made = std::make_shared<const SeFactor>(spec);
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, made);
    if (inserted) {
      order_.push_back(key);
      if (order_.size() > kSeCacheCapacity) {
        entries_.erase(order_.front());
        order_.pop_front();
      }
    }
    return it->second;
  }

 private:
  std::shared_mutex mutex_;
  std::map<SeKey, std::shared_ptr<const SeFactor>> entries_;
  std::deque<SeKey> order_;
};

SeCache& se_cache() {
  static SeCache cache;
  return cache;
}

}  // namespace

const char* hyperprior_name(HyperpriorKind kind) noexcept {
  switch (kind) {
    case HyperpriorKind::kAr1:
      return "ar1";
    case HyperpriorKind::kSe:
      return "se";
    case HyperpriorKind::kConst:
      return "const";
  }
  return "unknown";
}

HyperpriorKind parse_hyperprior(const std::string& name) {
  if (name == "ar1") return HyperpriorKind::kAr1;
  if (name == "se") return HyperpriorKind::kSe;
  if (name == "const") return HyperpriorKind::kConst;
  fail(ErrorCode::kConfigError, "unknown hyperprior '" + name + "'");
}

void HyperpriorSpec::validate() const {
  if (n < 1) fail(ErrorCode::kConfigError, "hyperprior grid is empty");
  if (!(h > 0.0)) fail(ErrorCode::kConfigError, "hyperprior grid step must be positive");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    fail(ErrorCode::kConfigError, "hyper length-scale must be positive");
  }
  if (kind != HyperpriorKind::kConst && !(tau_ell > 0.0)) {
    fail(ErrorCode::kConfigError, "hyperprior magnitude must be positive");
  }
}

HyperpriorSpec HyperpriorSpec::with_lambda(double new_lambda) const {
  HyperpriorSpec out = *this;
  out.lambda = new_lambda;
  return out;
}

Ar1Coefficients ar1_coefficients(double h, double lambda, double tau_ell) {
  const double r = h / lambda;
  const double root = std::sqrt(r + 4.0 / r);
  const double denom = tau_ell * std::sqrt(8.0);
  return {(std::sqrt(r) + root) / denom, (std::sqrt(r) - root) / denom};
}

BandedMatrix ar1_factor(const HyperpriorSpec& spec) {
  require_kind(spec, HyperpriorKind::kAr1, "ar1_factor");
  spec.validate();
  const Ar1Coefficients c = ar1_coefficients(spec.h, spec.lambda, spec.tau_ell);
  const Index n = spec.n;
  BandedMatrix l(n, 0, std::min<Index>(1, n - 1));
  for (Index i = 0; i < n; ++i) {
    l.ref(i, i) = i + 1 < n ? c.a0 : 1.0;
    if (i + 1 < n) l.ref(i, i + 1) = c.a1;
  }
  return l;
}

Matrix se_covariance(const HyperpriorSpec& spec) {
  const Index n = spec.n;
  const double tau2 = spec.tau_ell * spec.tau_ell;
  const double inv = 1.0 / (2.0 * spec.lambda * spec.lambda);
  Matrix c(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double d = static_cast<double>(i - j) * spec.h;
      c(i, j) = tau2 * std::exp(-d * d * inv);
    }
  }
  return c;
}

SeFactor::SeFactor(const HyperpriorSpec& spec) {
  require_kind(spec, HyperpriorKind::kSe, "SE factor");
  spec.validate();
  const Matrix c = se_covariance(spec);
  const double tau2 = spec.tau_ell * spec.tau_ell;
  for (double rel = kJitterStart; rel <= kJitterMax * (1.0 + 1e-9); rel *= 10.0) {
    Matrix jittered = c;
    jittered.diagonal().array() += rel * tau2;
    Eigen::LLT<Matrix> llt(jittered);
    if (llt.info() == Eigen::Success) {
      chol_ = llt.matrixL();
      jitter_ = rel * tau2;
      logdet_ = 2.0 * chol_.diagonal().array().log().sum();
      return;
    }
  }
  fail(ErrorCode::kNotPositiveDefinite,
       "SE covariance is not positive definite after maximum jitter");
}

const Matrix& SeFactor::precision() const {
  std::call_once(precision_once_, [this] {
    const Index n = chol_.rows();
    Matrix rinv = chol_.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
    precision_ = rinv.transpose() * rinv;
  });
  return precision_;
}

std::shared_ptr<const SeFactor> se_factor(const HyperpriorSpec& spec) {
  require_kind(spec, HyperpriorKind::kSe, "se_factor");
  return se_cache().get(spec);
}

Matrix se_chol(const HyperpriorSpec& spec) { return se_factor(spec)->chol(); }

Vector unwhiten(const HyperpriorSpec& spec, const Vector& zeta) {
  require_whitenable(spec, "unwhiten");
  require_length(spec, zeta);
  if (spec.kind == HyperpriorKind::kSe) {
    return (se_factor(spec)->chol() * zeta).array() + spec.mu_ell;
  }
  spec.validate();
  const Ar1Coefficients c = ar1_coefficients(spec.h, spec.lambda, spec.tau_ell);
  const Index n = spec.n;
  Vector v(n);
  v[n - 1] = zeta[n - 1];
  for (Index i = n - 2; i >= 0; --i) v[i] = (zeta[i] - c.a1 * v[i + 1]) / c.a0;
  return v.array() + spec.mu_ell;
}

Vector whiten(const HyperpriorSpec& spec, const Vector& u) {
  require_whitenable(spec, "whiten");
  require_length(spec, u);
  const Vector v = u.array() - spec.mu_ell;
  if (spec.kind == HyperpriorKind::kSe) {
    return se_factor(spec)->chol().triangularView<Eigen::Lower>().solve(v);
  }
  spec.validate();
  const Ar1Coefficients c = ar1_coefficients(spec.h, spec.lambda, spec.tau_ell);
  Vector zeta(spec.n);
  for (Index i = 0; i < spec.n; ++i) zeta[i] = ar1_row(c, v, i);
  return zeta;
}

Vector constant_field(const HyperpriorSpec& spec) {
  require_kind(spec, HyperpriorKind::kConst, "constant_field");
  spec.validate();
  return Vector::Constant(spec.n, std::log(spec.lambda));
}

double logpdf_u(const HyperpriorSpec& spec, const Vector& u) {
  require_whitenable(spec, "logpdf_u");
  require_length(spec, u);
  const double n = static_cast<double>(spec.n);
  const Vector zeta = whiten(spec, u);
  double logdet_r = 0.0;  // log det of the whitening map's inverse
  if (spec.kind == HyperpriorKind::kSe) {
    logdet_r = -0.5 * se_factor(spec)->logdet();
  } else {
    const Ar1Coefficients c = ar1_coefficients(spec.h, spec.lambda, spec.tau_ell);
    logdet_r = (n - 1.0) * std::log(c.a0);
  }
  return -0.5 * n * kLog2Pi + logdet_r - 0.5 * zeta.squaredNorm();
}

double logratio_u_site(const HyperpriorSpec& spec, const Vector& u, Index k,
                       double u_k_new) {
  require_whitenable(spec, "logratio_u_site");
  require_length(spec, u);
  if (k < 0 || k >= spec.n) fail(ErrorCode::kDimensionMismatch, "site out of range");
  const double d = u_k_new - u[k];
  if (d == 0.0) return 0.0;
  if (spec.kind == HyperpriorKind::kSe) {
    const Matrix& q = se_factor(spec)->precision();
    const Vector v = u.array() - spec.mu_ell;
    return -0.5 * d * d * q(k, k) - d * q.col(k).dot(v);
  }
  spec.validate();
  const Ar1Coefficients c = ar1_coefficients(spec.h, spec.lambda, spec.tau_ell);
  Vector v = u.array() - spec.mu_ell;
  const Index lo = std::max<Index>(0, k - 1);
  double old_q = 0.0;
  for (Index i = lo; i <= k; ++i) old_q += std::pow(ar1_row(c, v, i), 2);
  v[k] += d;
  double new_q = 0.0;
  for (Index i = lo; i <= k; ++i) new_q += std::pow(ar1_row(c, v, i), 2);
  return -0.5 * (new_q - old_q);
}

double logratio_lambda(const HyperpriorSpec& spec_new,
                       const HyperpriorSpec& spec_old, const Vector& u) {
  if (spec_new.kind != spec_old.kind || spec_new.n != spec_old.n ||
      spec_new.h != spec_old.h || spec_new.mu_ell != spec_old.mu_ell ||
      spec_new.tau_ell != spec_old.tau_ell) {
    fail(ErrorCode::kKindMismatch,
         "logratio_lambda: specs must differ only in lambda");
  }
  if (spec_new.lambda == spec_old.lambda) return 0.0;
  return logpdf_u(spec_new, u) - logpdf_u(spec_old, u);
}

ElicitedPrior elicit_prior(double min_distance, double max_distance) {
  if (!(min_distance > 0.0) || !(max_distance > min_distance) ||
      !std::isfinite(max_distance)) {
    fail(ErrorCode::kInvalidRange, "elicit_prior needs 0 < alpha < beta");
  }
  const double la = std::log(min_distance);
  const double lb = std::log(max_distance);
  return {0.5 * (la + lb), (lb - la) / 3.92};
}

}  // namespace nsgp
