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

#include "nsgp/diagnostics.hpp"
#include "nsgp/samplers.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace nsgp;

namespace {

struct Problem {
  Data1D data;
  ModelConfig model;
};

// Eight observations on a twelve-node grid, two of them between nodes.
Problem small_problem(HyperpriorKind kind) {
  Problem p{Data1D{ObservationOperator(12), Vector()}, ModelConfig{}};
  p.model.spde = SpdeConfig{12, 0.5, 2, 1.0, 1.5};
  p.model.prior.kind = kind;
  p.model.prior.mu_ell = 0.0;
  p.model.prior.tau_ell = 1.0;
  const double xs[] = {2.0, 2.5, 3.0, 3.25, 3.5, 4.0, 4.75, 5.0};
  std::vector<double> y = {0.3, 0.8, 1.1, 0.9, 0.2, -0.4, -0.9, -0.6};
  for (double x : xs) {
    const double pos = x / 0.5;
    const Index c = static_cast<Index>(std::floor(pos));
    const double w = pos - static_cast<double>(c);
    if (w == 0.0) {
      p.data.a.add_row(c, 1.0);
    } else {
      p.data.a.add_row(c, 1.0 - w, w);
    }
  }
  p.data.y = Eigen::Map<const Vector>(y.data(), 8);
  return p;
}

struct DensePosterior {
  Vector mean;
  Matrix cov;
};

DensePosterior dense_posterior(const Vector& u, double sigma2, const Data1D& data,
                               const SpdeConfig& cfg) {
  const Matrix q = precision(u, cfg).to_dense();
  const Matrix a = data.a.to_dense();
  const Matrix p = q + a.transpose() * a / sigma2;
  const Eigen::LLT<Matrix> llt(p);
  return {llt.solve(a.transpose() * data.y / sigma2), llt.solve(Matrix::Identity(p.rows(), p.cols()))};
}

void check_mean_within_3se(const Matrix& samples, const Vector& mean) {
  for (Index c = 0; c < samples.cols(); ++c) {
    const Vector col = samples.col(c);
    const double m = col.mean();
    const double sd = std::sqrt((col.array() - m).square().sum() / static_cast<double>(col.size() - 1));
    const double se = sd / std::sqrt(ess(col));
    CHECK(std::abs(m - mean[c]) < 3.0 * se);
  }
}

SamplerSettings frozen_settings(Index iterations) {
  SamplerSettings s;
  s.iterations = iterations;
  s.burnin_fraction = 0.2;
  s.update_sigma2 = false;
  s.update_u = false;
  s.update_lambda = false;
  s.init_log_sigma2 = std::log(0.05);
  s.init_log_lambda = std::log(2.0);
  return s;
}

}  // namespace

TEST_CASE("random-walk step on a standard normal") {
  Rng rng(11);
  AdaptiveScale scale;
  scale.scale = 0.5;
  auto lp = [](double x) { return -0.5 * x * x; };
  double x = 0.0;
  double l = lp(x);
  std::vector<double> xs;
  for (int t = 0; t < 100000; ++t) {
    const RwResult r = adaptive_rw_step(lp, x, l, scale, rng);
    x = r.x;
    l = r.logpost;
    xs.push_back(x);
  }
  CHECK(std::abs(scale.acceptance_rate() - 0.44) < 0.1);
  const Eigen::Map<const Vector> v(xs.data(), static_cast<Index>(xs.size()));
  const double var = (v.array() - v.mean()).square().mean();
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("random-walk step rejects non-finite proposals and a non-finite start") {
  Rng rng(3);
  AdaptiveScale scale;
  auto lp = [](double) { return -std::numeric_limits<double>::infinity(); };
  const RwResult r = adaptive_rw_step(lp, 1.0, 0.0, scale, rng);
  CHECK_FALSE(r.accepted);
  CHECK(r.x == 1.0);
  try {
    adaptive_rw_step(lp, 1.0, std::nan(""), scale, rng);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFiniteLogPost);
  }
}

TEST_CASE("adaptive scale moves by the batch rule and freezes") {
  AdaptiveScale s;
  s.scale = 1.0;
  for (int i = 0; i < AdaptiveScale::kBatch; ++i) s.record(true);
  CHECK(s.scale == doctest::Approx(std::exp(0.05)));
  for (int i = 0; i < AdaptiveScale::kBatch; ++i) s.record(false);
  CHECK(s.scale == doctest::Approx(1.0));
  s.frozen = true;
  for (int i = 0; i < 5 * AdaptiveScale::kBatch; ++i) s.record(true);
  CHECK(s.scale == doctest::Approx(1.0));
  CHECK(s.tries == 7 * AdaptiveScale::kBatch);
}

TEST_CASE("slice step with a flat likelihood accepts the first angle") {
  Rng rng(5);
  const Vector v = Vector::Constant(3, 1.0);
  const Vector nu = Vector::LinSpaced(3, -1.0, 1.0);
  auto flat = [](const Vector&) { return 0.0; };
  const SliceResult r = ess_slice_step(flat, v, 0.0, nu, std::log(0.5), 0.7, rng);
  CHECK(r.shrinks == 0);
  CHECK((r.v - (v * std::cos(0.7) + nu * std::sin(0.7))).norm() < 1e-15);
}

TEST_CASE("slice step at a quarter turn returns the auxiliary draw") {
  Rng rng(5);
  const Vector v = Vector::Constant(2, 4.0);
  const Vector nu(Vector::LinSpaced(2, 0.2, 0.3));
  auto ll = [](const Vector& x) { return -0.5 * x.squaredNorm(); };
  const SliceResult r =
      ess_slice_step(ll, v, ll(v), nu, std::log(0.9), std::numbers::pi / 2.0, rng);
  CHECK((r.v - nu).norm() < 1e-12);
}

TEST_CASE("slice sampling reaches a conjugate Gaussian posterior") {
  // N(0, I) prior times N(y | v, I) gives N(y / 2, I / 2).
  Rng rng(17);
  const Vector y = (Vector(2) << 1.0, -2.0).finished();
  auto ll = [&](const Vector& v) { return -0.5 * (y - v).squaredNorm(); };
  Vector v = Vector::Zero(2);
  double l = ll(v);
  Matrix draws(50000, 2);
  for (Index t = 0; t < draws.rows(); ++t) {
    const SliceResult r = ess_slice_step(ll, v, l, rng);
    v = r.v;
    l = r.loglik;
    draws.row(t) = v.transpose();
  }
  check_mean_within_3se(draws, y / 2.0);
  for (Index c = 0; c < 2; ++c) {
    const Vector col = draws.col(c);
    const double var = (col.array() - col.mean()).square().mean();
    CHECK(var == doctest::Approx(0.5).epsilon(0.05));
  }
}

TEST_CASE("recording schedule") {
  SamplerSettings s;
  s.iterations = 1000;
  s.burnin_fraction = 0.2;
  s.thin = 3;
  CHECK(s.burnin() == 200);
  CHECK(s.kept() == 266);
  const Problem p = small_problem(HyperpriorKind::kAr1);
  s.iterations = 100;
  const Trace tr = run_chain(SamplerKind::kMellss, p.data, p.model, s, 1);
  CHECK(tr.samples() == (100 - 20) / 3);
  CHECK(tr.iteration_index.front() == 23);
  CHECK(tr.z.rows() == tr.samples());
}

TEST_CASE("settings validation") {
  SamplerSettings s;
  s.thin = 0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = SamplerSettings{};
  s.burnin_fraction = 1.0;
  CHECK_THROWS_AS(s.validate(), Error);
  CHECK(parse_sampler("wellss") == SamplerKind::kWellss);
  CHECK_THROWS_AS(parse_sampler("gibbs"), Error);
}

TEST_CASE("a site sweep makes one decision per node") {
  const Problem p = small_problem(HyperpriorKind::kAr1);
  SamplerSettings s;
  ChainState st = initial_state(SamplerKind::kMwg, p.data, p.model, s);
  Rng rng(2);
  mwg_iteration(st, p.data, p.model, s, rng);
  CHECK(st.site_decisions == p.model.spde.n);
  mwg_iteration(st, p.data, p.model, s, rng);
  CHECK(st.site_decisions == 2 * p.model.spde.n);
}

TEST_CASE("initial state follows the documented recipe") {
  const Problem p = small_problem(HyperpriorKind::kAr1);
  SamplerSettings s;
  const ChainState st = initial_state(SamplerKind::kMellss, p.data, p.model, s);
  CHECK(st.zeta.isZero());
  CHECK(st.u.isConstant(0.0));
  CHECK(st.log_lambda == p.model.log_lambda.mean);
  const Vector d = p.data.y.tail(7) - p.data.y.head(7);
  const double var = (d.array() - d.mean()).square().sum() / 6.0;
  CHECK(st.log_sigma2 == doctest::Approx(std::log(var / 2.0)));
  const DensePosterior dp = dense_posterior(st.u, st.sigma2(), p.data, p.model.spde);
  CHECK((st.z - dp.mean).norm() < 1e-9);
}

TEST_CASE("chains are reproducible for a fixed seed") {
  const Problem p = small_problem(HyperpriorKind::kSe);
  SamplerSettings s;
  s.iterations = 200;
  for (SamplerKind k : {SamplerKind::kMwg, SamplerKind::kWellss, SamplerKind::kMellss}) {
    const Trace a = run_chain(k, p.data, p.model, s, 99);
    const Trace b = run_chain(k, p.data, p.model, s, 99);
    CHECK(a.z == b.z);
    CHECK(a.u == b.u);
    CHECK(a.lambda == b.lambda);
    CHECK(a.sigma2 == b.sigma2);
    const Trace c = run_chain(k, p.data, p.model, s, 100);
    CHECK(a.z != c.z);
  }
}

TEST_CASE("frozen hyperparameters recover the analytic latent posterior") {
  const Problem p = small_problem(HyperpriorKind::kAr1);
  const SamplerSettings s = frozen_settings(25000);
  const Vector u = Vector::Zero(p.model.spde.n);
  const DensePosterior dp = dense_posterior(u, 0.05, p.data, p.model.spde);
  for (SamplerKind k : {SamplerKind::kMwg, SamplerKind::kWellss, SamplerKind::kMellss}) {
    CAPTURE(sampler_name(k));
    const Trace tr = run_chain(k, p.data, p.model, s, 7);
    REQUIRE(tr.samples() >= 20000);
    check_mean_within_3se(tr.z, dp.mean);
    for (Index c = 0; c < tr.z.cols(); ++c) {
      const Vector col = tr.z.col(c);
      const double var = (col.array() - col.mean()).square().mean();
      CHECK(var == doctest::Approx(dp.cov(c, c)).epsilon(0.06));
    }
  }
}

TEST_CASE("without data every sampler preserves the prior") {
  const Problem p = small_problem(HyperpriorKind::kAr1);
  SamplerSettings s;
  s.iterations = 150000;
  s.thin = 75;
  s.use_likelihood = false;
  s.record_z = false;
  const double lam_sd = std::sqrt(p.model.log_lambda.var);
  const double s2_sd = std::sqrt(p.model.log_sigma2.var);
  for (SamplerKind k : {SamplerKind::kMwg, SamplerKind::kWellss, SamplerKind::kMellss}) {
    CAPTURE(sampler_name(k));
    const Trace tr = run_chain(k, p.data, p.model, s, 21);
    std::vector<double> log_lam;
    std::vector<double> log_s2;
    Matrix zeta(tr.samples(), p.model.spde.n);
    for (Index i = 0; i < tr.samples(); ++i) {
      const double ll = std::log(tr.lambda[static_cast<std::size_t>(i)]);
      log_lam.push_back(ll);
      log_s2.push_back(std::log(tr.sigma2[static_cast<std::size_t>(i)]));
      zeta.row(i) = whiten(p.model.prior_at(ll), Vector(tr.u.row(i).transpose())).transpose();
    }
    CHECK(ks_test(log_lam, [&](double x) { return normal_cdf(x, p.model.log_lambda.mean, lam_sd); })
              .p_value > 0.001);
    CHECK(ks_test(log_s2, [&](double x) { return normal_cdf(x, p.model.log_sigma2.mean, s2_sd); })
              .p_value > 0.001);
    for (Index c = 0; c < zeta.cols(); ++c) {
      const Vector col = zeta.col(c);
      std::vector<double> v(col.data(), col.data() + col.size());
      CHECK(ks_test(v, [](double x) { return normal_cdf(x); }).p_value > 0.001);
    }
  }
}

TEST_CASE("a constant length-scale model keeps the field flat") {
  const Problem p = small_problem(HyperpriorKind::kConst);
  SamplerSettings s;
  s.iterations = 300;
  for (SamplerKind k : {SamplerKind::kMwg, SamplerKind::kWellss, SamplerKind::kMellss}) {
    const Trace tr = run_chain(k, p.data, p.model, s, 4);
    for (Index i = 0; i < tr.samples(); ++i) {
      CHECK(tr.u.row(i).isConstant(std::log(tr.lambda[static_cast<std::size_t>(i)]), 1e-12));
    }
  }
}

TEST_CASE("mismatched data are rejected") {
  Problem p = small_problem(HyperpriorKind::kAr1);
  p.data.y.conservativeResize(5);
  CHECK_THROWS_AS(run_chain(SamplerKind::kMellss, p.data, p.model, SamplerSettings{}, 1), Error);
}
