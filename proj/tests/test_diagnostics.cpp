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
#include "nsgp/error.hpp"
#include "nsgp/rng.hpp"

#include <nlohmann/json.hpp>
#include <doctest.h>

#include <cmath>

using namespace nsgp;

namespace {

std::vector<double> ar1_chain(double rho, Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(static_cast<std::size_t>(n));
  double v = standard_normal(rng) / std::sqrt(1.0 - rho * rho);
  for (auto& xi : x) {
    v = rho * v + standard_normal(rng);
    xi = v;
  }
  return x;
}

}  // namespace

TEST_CASE("effective sample size") {
  const auto iid = ar1_chain(0.0, 100000, 1);
  const double r0 = ess(iid) / 1e5;
  CHECK(r0 >= 0.9);
  CHECK(r0 <= 1.0);
  const auto ar = ar1_chain(0.9, 100000, 2);
  CHECK(ess(ar) / 1e5 == doctest::Approx(1.0 / 19.0).epsilon(0.2));
  CHECK_THROWS_AS(ess(std::vector<double>(50, 3.0)), Error);
  CHECK_THROWS_AS(ess(std::vector<double>(5, 1.0)), Error);
  const Vector v = Eigen::Map<const Vector>(ar.data(), static_cast<Index>(ar.size()));
  CHECK(ess(v) == ess(ar));
}

TEST_CASE("Geweke score") {
  const auto iid = ar1_chain(0.0, 20000, 3);
  CHECK(std::abs(geweke_z(Eigen::Map<const Vector>(iid.data(), 20000))) < 4.0);
  Vector drift(20000);
  for (Index i = 0; i < drift.size(); ++i) drift[i] = iid[static_cast<std::size_t>(i)] + 1e-3 * static_cast<double>(i);
  CHECK(std::abs(geweke_z(drift)) > 5.0);
}

TEST_CASE("efficiency, error and coverage") {
  CHECK(oes(12234.4, 18.503) == doctest::Approx(661.2).epsilon(1e-4));
  CHECK(oes(10.0, 2.0) == 5.0);
  const Vector x = (Vector(3) << 1.0, -2.0, 0.5).finished();
  CHECK(mae(x, x) == 0.0);
  CHECK(mae(x, Vector::Zero(3)) == doctest::Approx(3.5 / 3.0));
  const Vector p = (Vector(3) << 0.5, 1.0, -2.0).finished();
  CHECK(mae(p, Vector::Zero(3)) == mae(x, Vector::Zero(3)));
  CredibleBand band{Vector::Constant(3, -5.0), Vector::Constant(3, 5.0)};
  CHECK(ec(band, x) == 1.0);
  band.hi[1] = -3.0;
  CHECK(ec(band, x) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("quantiles and bands") {
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
  CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 0.25) == 1.75);
  const Matrix constant = Matrix::Constant(50, 2, 1.5);
  const CredibleBand c = credible_band(constant);
  CHECK(c.lo == Vector::Constant(2, 1.5));
  CHECK(c.hi == Vector::Constant(2, 1.5));
  Rng rng(4);
  Matrix t(2000, 5);
  for (Index i = 0; i < t.rows(); ++i) t.row(i) = standard_normal_vector(rng, 5).array().exp().matrix().transpose();
  const CredibleBand b = credible_band(t);
  const Vector mean = t.colwise().mean();
  for (Index c2 = 0; c2 < 5; ++c2) {
    CHECK(b.lo[c2] <= mean[c2]);
    CHECK(mean[c2] <= b.hi[c2]);
  }
}

TEST_CASE("Kolmogorov-Smirnov") {
  Rng rng(5);
  std::vector<double> s(2000);
  for (auto& v : s) v = standard_normal(rng);
  CHECK(ks_test(s, [](double x) { return normal_cdf(x); }).p_value > 0.01);
  CHECK(ks_test(s, [](double x) { return normal_cdf(x, 0.3); }).p_value < 1e-6);
  CHECK(ks_test({0.5}, [](double x) { return x; }).statistic == doctest::Approx(0.5));
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021).epsilon(1e-6));
}

TEST_CASE("report serialization") {
  FitReport r;
  r.model = "1d";
  r.sampler = "mellss";
  r.hyperprior = "ar1";
  r.iterations = 100;
  r.burnin = 20;
  r.kept = 80;
  r.ess = {{"sigma2", 40.0}, {"lambda", 12.0}};
  r.mae = 0.05;
  r.posterior_mean = {1.0, 2.0};
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["sampler"] == "mellss");
  CHECK(j["ess_min"].get<double>() == 12.0);
  CHECK(j["mae"].get<double>() == 0.05);
  CHECK_FALSE(j.contains("ec"));
  CHECK_FALSE(j.contains("cpu_minutes"));
  CHECK(j["posterior_mean"].size() == 2);
}
