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

#include "nsgp/error.hpp"
#include "nsgp/hyperprior.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace nsgp;
using nsgp::testing::dense_gaussian_logpdf;

namespace {

HyperpriorSpec make_spec(HyperpriorKind kind, Index n, double h, double lambda,
                         double tau = 1.0, double mu = 0.0) {
  HyperpriorSpec s;
  s.kind = kind;
  s.n = n;
  s.h = h;
  s.lambda = lambda;
  s.tau_ell = tau;
  s.mu_ell = mu;
  return s;
}

Matrix dense_covariance(const HyperpriorSpec& s) {
  if (s.kind == HyperpriorKind::kSe) {
    Matrix c = se_covariance(s);
    c.diagonal().array() += se_factor(s)->jitter();
    return c;
  }
  const Matrix l = ar1_factor(s).to_dense();
  return (l.transpose() * l).inverse();
}

}  // namespace

TEST_CASE("AR(1) coefficients") {
  const Ar1Coefficients c = ar1_coefficients(1.0, 1.0, 1.0);
  CHECK(c.a0 == doctest::Approx(1.144123).epsilon(1e-6));
  CHECK(c.a1 == doctest::Approx(-0.437016).epsilon(1e-6));
  const Ar1Coefficients f = ar1_coefficients(0.1, 1.0, 1.0);
  CHECK(f.a0 == doctest::Approx(2.350670).epsilon(1e-5));
  CHECK(f.a1 == doctest::Approx(-2.127058).epsilon(1e-6));
  CHECK(1.0 / ((f.a0 + f.a1) * (f.a0 - f.a1)) == doctest::Approx(0.99875).epsilon(1e-5));
  for (double h : {1e-3, 0.1, 1.0, 10.0}) {
    for (double lambda : {1e-2, 1.0, 50.0}) {
      const double beta = ar1_coefficients(h, lambda, 1.0).beta();
      CHECK(beta > 0.0);
      CHECK(beta < 1.0);
    }
  }
}

TEST_CASE("AR(1) factor shape and calibration") {
  const HyperpriorSpec s = make_spec(HyperpriorKind::kAr1, 300, 0.1, 1.0);
  const BandedMatrix l = ar1_factor(s);
  CHECK(l.lower() == 0);
  CHECK(l.upper() == 1);
  CHECK(l(299, 299) == 1.0);
  const Matrix cov = dense_covariance(s);
  const Index mid = 150;
  CHECK(cov(mid, mid) == doctest::Approx(1.0).epsilon(0.02));
  for (Index lag = 1; lag <= 30; ++lag) {
    const double corr = cov(mid, mid + lag) / std::sqrt(cov(mid, mid) * cov(mid + lag, mid + lag));
    const double target = std::exp(-static_cast<double>(lag) * 0.1);
    CHECK(std::abs(corr - target) / target < 0.05);
  }
  CHECK_THROWS_AS(ar1_factor(make_spec(HyperpriorKind::kSe, 5, 1.0, 1.0)), Error);
}

TEST_CASE("SE factor") {
  const HyperpriorSpec single = make_spec(HyperpriorKind::kSe, 1, 1.0, 1.0, 1.5);
  CHECK(se_chol(single)(0, 0) == doctest::Approx(1.5).epsilon(1e-9));
  const HyperpriorSpec pair = make_spec(HyperpriorKind::kSe, 2, 0.7, 0.7);
  CHECK(se_covariance(pair)(0, 1) == doctest::Approx(std::exp(-0.5)));
  const HyperpriorSpec s = make_spec(HyperpriorKind::kSe, 30, 0.2, 0.5, 1.3);
  const Matrix r = se_chol(s);
  const Matrix c = dense_covariance(s);
  CHECK(nsgp::testing::rel_frobenius(r * r.transpose(), c) < 1e-8);
  const Matrix oracle = Eigen::LLT<Matrix>(c).matrixL();
  CHECK((r - oracle).cwiseAbs().maxCoeff() < 1e-8);
  const Matrix corr = se_covariance(s) / (1.3 * 1.3);
  CHECK((corr.diagonal().array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK((corr - corr.transpose()).norm() == 0.0);
  // Cached instance is shared.
  CHECK(se_factor(s).get() == se_factor(s).get());
}

TEST_CASE("whitening round trips") {
  Rng rng(6);
  for (HyperpriorKind kind : {HyperpriorKind::kAr1, HyperpriorKind::kSe}) {
    const HyperpriorSpec s = make_spec(kind, 100, 0.1, 0.8, 1.2, -0.4);
    CHECK((unwhiten(s, Vector::Zero(100)).array() + 0.4).abs().maxCoeff() < 1e-15);
    const Vector zeta = standard_normal_vector(rng, 100);
    CHECK((whiten(s, unwhiten(s, zeta)) - zeta).cwiseAbs().maxCoeff() < 1e-9);
  }
  const HyperpriorSpec c = make_spec(HyperpriorKind::kConst, 10, 0.1, 2.0);
  for (auto fn : {&whiten, &unwhiten}) {
    try {
      fn(c, Vector::Zero(10));
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kWrongKind);
    }
  }
  CHECK(constant_field(c)[3] == doctest::Approx(std::log(2.0)));
}

TEST_CASE("unwhitened AR(1) draws have the prior variance") {
  Rng rng(31);
  const HyperpriorSpec s = make_spec(HyperpriorKind::kAr1, 200, 0.1, 1.0, 1.0);
  const double exact = dense_covariance(s)(100, 100);
  const int draws = 100000;
  double acc = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = unwhiten(s, standard_normal_vector(rng, 200))[100];
    acc += v * v;
  }
  const double emp = acc / draws;
  CHECK(std::abs(emp - exact) < 3.0 * exact * std::sqrt(2.0 / draws));
}

TEST_CASE("log density and single-site ratios match dense Gaussians") {
  Rng rng(13);
  for (HyperpriorKind kind : {HyperpriorKind::kAr1, HyperpriorKind::kSe}) {
    const HyperpriorSpec s = make_spec(kind, 25, 0.2, 0.6, 0.9, 0.3);
    const Matrix cov = dense_covariance(s);
    const Vector mean = Vector::Constant(25, 0.3);
    const Vector u = unwhiten(s, standard_normal_vector(rng, 25));
    CHECK(std::abs(logpdf_u(s, u) - dense_gaussian_logpdf(u, mean, cov)) < 1e-8);
    for (int rep = 0; rep < 10; ++rep) {
      const Index k = static_cast<Index>(uniform01(rng) * 25.0);
      Vector u2 = u;
      u2[k] += 0.3 * standard_normal(rng);
      const double dense = dense_gaussian_logpdf(u2, mean, cov) - dense_gaussian_logpdf(u, mean, cov);
      CHECK(std::abs(logratio_u_site(s, u, k, u2[k]) - dense) < 1e-8 * std::max(1.0, std::abs(dense)));
    }
    CHECK(logratio_u_site(s, u, 4, u[4]) == 0.0);
  }
  const HyperpriorSpec s = make_spec(HyperpriorKind::kAr1, 12, 0.5, 1.0);
  const double logdet_l = 11.0 * std::log(ar1_coefficients(0.5, 1.0, 1.0).a0);
  CHECK(logpdf_u(s, Vector::Zero(12)) == doctest::Approx(-6.0 * std::log(2.0 * M_PI) + logdet_l));
}

TEST_CASE("hyper length-scale ratios") {
  Rng rng(14);
  const HyperpriorSpec ar = make_spec(HyperpriorKind::kAr1, 200, 0.05, 0.7);
  const Vector u = unwhiten(ar, standard_normal_vector(rng, 200));
  CHECK(logratio_lambda(ar, ar, u) == 0.0);
  const HyperpriorSpec ar2 = ar.with_lambda(1.4);
  CHECK(std::abs(logratio_lambda(ar2, ar, u) - (logpdf_u(ar2, u) - logpdf_u(ar, u))) < 1e-8);

  const HyperpriorSpec se = make_spec(HyperpriorKind::kSe, 25, 0.2, 0.5);
  const Vector v = unwhiten(se, standard_normal_vector(rng, 25));
  const HyperpriorSpec se2 = se.with_lambda(0.6);
  const double dense = dense_gaussian_logpdf(v, Vector::Zero(25), dense_covariance(se2)) -
                       dense_gaussian_logpdf(v, Vector::Zero(25), dense_covariance(se));
  CHECK(std::abs(logratio_lambda(se2, se, v) - dense) < 1e-6 * std::max(1.0, std::abs(dense)));

  HyperpriorSpec other = se2;
  other.kind = HyperpriorKind::kAr1;
  try {
    logratio_lambda(other, se, v);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kKindMismatch);
  }
}

TEST_CASE("prior elicitation") {
  const ElicitedPrior sym = elicit_prior(std::exp(-2.0), std::exp(2.0));
  CHECK(sym.mu_ell == doctest::Approx(0.0));
  CHECK(sym.tau_ell == doctest::Approx(1.020408).epsilon(1e-6));
  const ElicitedPrior exp3 = elicit_prior(0.0019, 1.0);
  CHECK(exp3.mu_ell == doctest::Approx(-3.13297).epsilon(1e-5));
  CHECK(exp3.tau_ell * exp3.tau_ell == doctest::Approx(2.55504).epsilon(1e-5));
  CHECK(elicit_prior(3.0 * std::exp(-3.92), 3.0).tau_ell == doctest::Approx(1.0));
  try {
    elicit_prior(2.0, 1.0);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidRange);
  }
}
