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

#include "nsgp/additive.hpp"
#include "nsgp/diagnostics.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace nsgp;
using nsgp::testing::dense_gaussian_logpdf;
using nsgp::testing::random_spd;

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return k;
}

struct GridData {
  Vector x1;
  Vector x2;
  Vector y;
  std::vector<std::uint8_t> missing;
};

GridData lattice(Index n1, Index n2, double h1, double h2, std::uint64_t seed) {
  Rng rng(seed);
  GridData g;
  g.x1.resize(n1 * n2);
  g.x2.resize(n1 * n2);
  g.y.resize(n1 * n2);
  for (Index i = 0; i < n1; ++i) {
    for (Index j = 0; j < n2; ++j) {
      const Index r = i * n2 + j;
      g.x1[r] = 1.0 + static_cast<double>(i) * h1;
      g.x2[r] = -2.0 + static_cast<double>(j) * h2;
      g.y[r] = std::sin(g.x1[r]) + 0.5 * std::cos(g.x2[r]) + 0.1 * standard_normal(rng);
    }
  }
  g.missing.assign(static_cast<std::size_t>(n1 * n2), 0);
  return g;
}

Model2D small_model(const Grid2D& grid, HyperpriorKind kind, bool interaction) {
  Model2D m;
  m.spde1 = SpdeConfig{grid.n1(), grid.axis1.h, grid.axis1.n_ext, 1.0, 1.5};
  m.spde2 = SpdeConfig{grid.n2(), grid.axis2.h, grid.axis2.n_ext, 1.0, 1.5};
  m.prior.kind = kind;
  m.prior.mu_ell = 0.0;
  m.prior.tau_ell = 1.0;
  m.interaction = interaction;
  return m;
}


Vector column_se(const Matrix& samples) {
  Vector se(samples.cols());
  for (Index c = 0; c < samples.cols(); ++c) {
    const Vector col = samples.col(c);
    const double sd =
        std::sqrt((col.array() - col.mean()).square().sum() / static_cast<double>(col.size() - 1));
    se[c] = sd / std::sqrt(ess(col));
  }
  return se;
}

}  // namespace

TEST_CASE("grid placement and cell kinds") {
  GridData g = lattice(5, 6, 0.5, 0.25, 1);
  g.missing[7] = 1;
  const Grid2D grid = build_grid_2d(g.x1, g.x2, g.missing, 2, 1);
  CHECK(grid.n1() == 9);
  CHECK(grid.n2() == 8);
  CHECK(grid.axis1.h == doctest::Approx(0.5));
  CHECK(grid.axis2.h == doctest::Approx(0.25));
  CHECK(grid.count(CellKind::kObserved) == 29);
  CHECK(grid.count(CellKind::kMissing) == 1);
  CHECK(grid.count(CellKind::kExtension) == 72 - 30);
  CHECK(grid.data_row[static_cast<std::size_t>(grid.cell(2, 1))] == 0);
  CHECK(grid.kind[static_cast<std::size_t>(grid.cell(3, 2))] == CellKind::kMissing);

  const AdditiveData first = make_additive_data(grid, g.y, false);
  CHECK(first.rows() == 30);
  const AdditiveData full = make_additive_data(grid, g.y, true);
  CHECK(full.rows() == 72);
  for (Index r = 0; r < full.rows(); ++r) CHECK(full.row_cell[static_cast<std::size_t>(r)] == r);
  CHECK(full.a1.gram().to_dense().isApprox(8.0 * Matrix::Identity(9, 9)));
}

TEST_CASE("absent grid nodes become missing cells") {
  GridData g = lattice(5, 5, 1.0, 1.0, 2);
  Vector x1 = g.x1.head(24);
  Vector x2 = g.x2.head(24);
  const Grid2D grid = build_grid_2d(x1, x2, {}, 0, 0);
  CHECK(grid.count(CellKind::kMissing) == 1);
  CHECK(grid.data_row.back() == -1);
}

TEST_CASE("grid placement errors") {
  GridData g = lattice(5, 5, 1.0, 1.0, 3);
  Vector off = g.x1;
  off[3] += 0.3;
  CHECK_THROWS_AS(build_grid_2d(off, g.x2, g.missing, 0, 0), Error);
  Vector dup1 = g.x1;
  Vector dup2 = g.x2;
  dup1[1] = dup1[0];
  dup2[1] = dup2[0];
  CHECK_THROWS_AS(build_grid_2d(dup1, dup2, g.missing, 0, 0), Error);
  CHECK_THROWS_AS(build_grid_2d(g.x1, g.x2.head(3), g.missing, 0, 0), Error);
}

TEST_CASE("Kronecker matrix-vector product matches the dense product") {
  Rng rng(4);
  const Matrix e3 = Matrix::Random(3, 3);
  const Matrix e4 = Matrix::Random(4, 4);
  const Vector a = standard_normal_vector(rng, 12);
  CHECK((kron_mv(e3, e4, a) - kron(e3, e4) * a).norm() < 1e-12);
  CHECK_THROWS_AS(kron_mv(e3, e4, Vector::Zero(5)), Error);
}

TEST_CASE("eigendecomposition reconstructs both precisions") {
  Rng rng(5);
  const BandedMatrix q3 = random_spd(rng, 6, 2);
  const BandedMatrix q4 = random_spd(rng, 5, 2);
  const KroneckerEigen e = kronecker_eigen(q3, q4);
  CHECK((e.e3 * e.lambda3.asDiagonal() * e.e3.transpose() - q3.to_dense()).norm() < 1e-8);
  CHECK((e.e4 * e.lambda4.asDiagonal() * e.e4.transpose() - q4.to_dense()).norm() < 1e-8);
}

TEST_CASE("interaction draw: scalar case") {
  const KroneckerEigen e{Matrix::Ones(1, 1), Vector::Ones(1), Matrix::Ones(1, 1), Vector::Ones(1)};
  const Vector y = Vector::Constant(1, 2.0);
  CHECK(z3_posterior_draw(e, 1.0, y, Vector::Zero(1))[0] == doctest::Approx(1.0));
}

TEST_CASE("interaction draw mean and covariance match dense algebra") {
  Rng rng(6);
  const BandedMatrix q3 = random_spd(rng, 3, 1);
  const BandedMatrix q4 = random_spd(rng, 3, 2);
  const KroneckerEigen e = kronecker_eigen(q3, q4);
  const Vector y = standard_normal_vector(rng, 9);
  const double s2 = 0.7;
  const Matrix p = kron(q3.to_dense(), q4.to_dense()) + Matrix::Identity(9, 9) / s2;
  const Vector mu = p.llt().solve(y / s2);
  CHECK((z3_posterior_draw(e, s2, y, Vector::Zero(9)) - mu).norm() < 1e-8);

  const BandedMatrix r3 = random_spd(rng, 2, 1);
  const BandedMatrix r4 = random_spd(rng, 2, 1);
  const KroneckerEigen e2 = kronecker_eigen(r3, r4);
  const Vector y2 = standard_normal_vector(rng, 4);
  const Matrix p2 = kron(r3.to_dense(), r4.to_dense()) + Matrix::Identity(4, 4) / s2;
  const Matrix sigma = p2.inverse();
  const Vector mu2 = sigma * y2 / s2;
  const Index draws = 100000;
  Matrix acc = Matrix::Zero(4, 4);
  Vector mean = Vector::Zero(4);
  for (Index t = 0; t < draws; ++t) {
    const Vector d = z3_posterior_draw(e2, s2, y2, standard_normal_vector(rng, 4)) - mu2;
    mean += d;
    acc += d * d.transpose();
  }
  acc /= static_cast<double>(draws);
  mean /= static_cast<double>(draws);
  for (Index i = 0; i < 4; ++i) {
    CHECK(std::abs(mean[i]) < 3.0 * std::sqrt(sigma(i, i) / static_cast<double>(draws)));
    for (Index j = 0; j < 4; ++j) {
      const double se = std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) /
                                  static_cast<double>(draws));
      CHECK(std::abs(acc(i, j) - sigma(i, j)) < 3.0 * se);
    }
  }
}

TEST_CASE("interaction marginal likelihood") {
  SUBCASE("scalar") {
    const KroneckerEigen e{Matrix::Ones(1, 1), Vector::Ones(1), Matrix::Ones(1, 1), Vector::Ones(1)};
    CHECK(block_marginal_loglik_interaction(e, 1.0, Vector::Zero(1)) ==
          doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(2.0)));
  }
  SUBCASE("dense oracle and scaling") {
    Rng rng(8);
    for (int rep = 0; rep < 10; ++rep) {
      const Index n1 = 2 + rep % 7;
      const Index n2 = 2 + (rep * 3) % 7;
      const BandedMatrix q3 = random_spd(rng, n1, std::min<Index>(2, n1 - 1));
      const BandedMatrix q4 = random_spd(rng, n2, 1);
      const KroneckerEigen e = kronecker_eigen(q3, q4);
      const Vector y = standard_normal_vector(rng, n1 * n2);
      const double s2 = uniform(rng, 0.05, 2.0);
      const Matrix cov = kron(q3.to_dense().inverse(), q4.to_dense().inverse()) +
                         s2 * Matrix::Identity(n1 * n2, n1 * n2);
      const double dense = dense_gaussian_logpdf(y, Vector::Zero(n1 * n2), cov);
      const double fast = block_marginal_loglik_interaction(e, s2, y);
      CHECK(std::abs(fast - dense) < 1e-6);
      const double zero = block_marginal_loglik_interaction(e, s2, Vector::Zero(n1 * n2));
      const double scaled = block_marginal_loglik_interaction(e, s2, 3.0 * y);
      CHECK((scaled - zero) == doctest::Approx(9.0 * (fast - zero)));
    }
  }
}

TEST_CASE("first-order block marginal likelihood") {
  SpdeConfig cfg{8, 0.5, 1, 1.0, 1.5};
  Rng rng(9);
  const Vector u = 0.3 * standard_normal_vector(rng, 8);
  SUBCASE("no columns used reduces to white noise") {
    ObservationOperator a(8);
    for (int i = 0; i < 5; ++i) a.add_empty_row();
    const Vector y = standard_normal_vector(rng, 5);
    const double expected =
        dense_gaussian_logpdf(y, Vector::Zero(5), 0.4 * Matrix::Identity(5, 5));
    CHECK(block_marginal_loglik_1d(u, 0.4, a, y, cfg) == doctest::Approx(expected));
  }
  SUBCASE("replicated selection rows match the dense covariance") {
    ObservationOperator a(8);
    for (Index i = 0; i < 8; ++i) {
      for (int rep = 0; rep < 40; ++rep) a.add_row(i, 1.0);
    }
    const Vector y = standard_normal_vector(rng, a.rows());
    const Matrix ad = a.to_dense();
    const Matrix cov = ad * precision(u, cfg).to_dense().inverse() * ad.transpose() +
                       0.3 * Matrix::Identity(a.rows(), a.rows());
    CHECK(std::abs(block_marginal_loglik_1d(u, 0.3, a, y, cfg) -
                   dense_gaussian_logpdf(y, Vector::Zero(a.rows()), cov)) < 1e-6);
  }
}

TEST_CASE("imputation") {
  GridData g = lattice(5, 5, 1.0, 1.0, 10);
  const Grid2D grid = build_grid_2d(g.x1, g.x2, g.missing, 0, 0);
  AdditiveData data = make_additive_data(grid, g.y, false);
  const Model2D model = small_model(grid, HyperpriorKind::kAr1, false);
  AdditiveState st = initial_state_2d(data, model, SamplerSettings{});
  const Vector before = data.y;
  Rng rng(1);
  impute_missing(st, data, rng);
  CHECK(data.y == before);

  g.missing[12] = 1;
  const Grid2D grid2 = build_grid_2d(g.x1, g.x2, g.missing, 0, 0);
  AdditiveData d2 = make_additive_data(grid2, g.y, false);
  AdditiveState s2 = initial_state_2d(d2, model, SamplerSettings{});
  s2.log_sigma2 = std::log(1e-300);
  impute_missing(s2, d2, rng);
  CHECK(d2.y[12] == doctest::Approx(s2.fitted(d2)[12]));
  s2.log_sigma2 = std::log(0.25);
  double sum = 0.0;
  const int reps = 40000;
  for (int i = 0; i < reps; ++i) {
    impute_missing(s2, d2, rng);
    sum += d2.y[12];
  }
  CHECK(std::abs(sum / reps - s2.fitted(d2)[12]) < 3.0 * 0.5 / std::sqrt(reps));
}

TEST_CASE("frozen hyperparameters recover the joint additive posterior") {
  const GridData g = lattice(5, 6, 0.8, 0.6, 11);
  const Grid2D grid = build_grid_2d(g.x1, g.x2, g.missing, 0, 0);
  const AdditiveData data = make_additive_data(grid, g.y, true);
  const Model2D model = small_model(grid, HyperpriorKind::kAr1, true);
  SamplerSettings s;
  s.iterations = 25000;
  s.update_sigma2 = false;
  s.update_u = false;
  s.update_lambda = false;
  s.init_log_sigma2 = std::log(0.05);
  const Trace2D tr = run_chain_2d(data, model, s, 3);
  REQUIRE(tr.samples() >= 20000);

  const Index n1 = grid.n1();
  const Index n2 = grid.n2();
  const Index m = data.rows();
  const Vector u1 = Vector::Zero(n1);
  const Vector u2 = Vector::Zero(n2);
  const Matrix q1 = precision(u1, model.spde1).to_dense();
  const Matrix q2 = precision(u2, model.spde2).to_dense();
  const Index dim = n1 + n2 + m;
  Matrix prior = Matrix::Zero(dim, dim);
  prior.block(0, 0, n1, n1) = q1;
  prior.block(n1, n1, n2, n2) = q2;
  prior.block(n1 + n2, n1 + n2, m, m) = kron(q1, q2);
  Matrix b(m, dim);
  b << data.a1.to_dense(), data.a2.to_dense(), Matrix::Identity(m, m);
  const Matrix p = prior + b.transpose() * b / 0.05;
  const Vector mean = p.llt().solve(b.transpose() * data.y / 0.05);

  const Vector fit_mean = b * mean;
  const Vector fit_se = column_se(tr.fitted);
  const Vector fit_hat = tr.fitted.colwise().mean();
  for (Index c = 0; c < m; ++c) CHECK(std::abs(fit_hat[c] - fit_mean[c]) < 3.0 * fit_se[c]);

  const Vector z1c = mean.head(n1).array() - mean.head(n1).mean();
  const Vector z1_hat = tr.z1.colwise().mean();
  const Vector z1_se = column_se(tr.z1);
  for (Index c = 0; c < n1; ++c) CHECK(std::abs(z1_hat[c] - z1c[c]) < 3.0 * z1_se[c]);
  const Vector z2c = mean.segment(n1, n2).array() - mean.segment(n1, n2).mean();
  const Vector z2_hat = tr.z2.colwise().mean();
  const Vector z2_se = column_se(tr.z2);
  for (Index c = 0; c < n2; ++c) CHECK(std::abs(z2_hat[c] - z2c[c]) < 3.0 * z2_se[c]);
}

TEST_CASE("recorded centring leaves the fitted surface unchanged") {
  const GridData g = lattice(6, 5, 0.5, 0.5, 12);
  const Grid2D grid = build_grid_2d(g.x1, g.x2, g.missing, 1, 1);
  const AdditiveData data = make_additive_data(grid, g.y, false);
  const Model2D model = small_model(grid, HyperpriorKind::kAr1, false);
  SamplerSettings s;
  s.iterations = 60;
  const Trace2D tr = run_chain_2d(data, model, s, 5);
  for (Index i = 0; i < tr.samples(); ++i) {
    CHECK(std::abs(tr.z1.row(i).sum()) < 1e-10);
    for (std::size_t k = 0; k < tr.fitted_cells.size(); ++k) {
      const Index c = tr.fitted_cells[k];
      const double rebuilt = tr.intercept[static_cast<std::size_t>(i)] +
                             tr.z1(i, c / grid.n2()) + tr.z2(i, c % grid.n2());
      CHECK(tr.fitted(i, static_cast<Index>(k)) == doctest::Approx(rebuilt));
    }
  }
}

TEST_CASE("without data the block sampler preserves the prior") {
  const GridData g = lattice(5, 5, 0.5, 0.5, 13);
  const Grid2D grid = build_grid_2d(g.x1, g.x2, g.missing, 0, 0);
  const AdditiveData data = make_additive_data(grid, g.y, false);
  const Model2D model = small_model(grid, HyperpriorKind::kSe, false);
  SamplerSettings s;
  s.iterations = 100000;
  s.thin = 50;
  s.use_likelihood = false;
  const Trace2D tr = run_chain_2d(data, model, s, 8);
  const double lam_sd = std::sqrt(model.log_lambda.var);
  for (int f = 0; f < 2; ++f) {
    const Matrix& u = f == 0 ? tr.u1 : tr.u2;
    std::vector<double> log_lam;
    Matrix zeta(tr.samples(), u.cols());
    for (Index i = 0; i < tr.samples(); ++i) {
      const double ll = std::log(tr.lambda[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)]);
      log_lam.push_back(ll);
      zeta.row(i) = whiten(model.prior_at(f, ll), Vector(u.row(i).transpose())).transpose();
    }
    CHECK(ks_test(log_lam, [&](double x) { return normal_cdf(x, model.log_lambda.mean, lam_sd); })
              .p_value > 0.001);
    for (Index c = 0; c < zeta.cols(); ++c) {
      const Vector col = zeta.col(c);
      CHECK(ks_test(std::vector<double>(col.data(), col.data() + col.size()),
                    [](double x) { return normal_cdf(x); })
                .p_value > 0.001);
    }
  }
  std::vector<double> log_s2;
  for (double v : tr.sigma2) log_s2.push_back(std::log(v));
  CHECK(ks_test(log_s2, [&](double x) {
          return normal_cdf(x, model.log_sigma2.mean, std::sqrt(model.log_sigma2.var));
        }).p_value > 0.001);
}

TEST_CASE("block chains are reproducible") {
  const GridData g = lattice(5, 5, 0.5, 0.5, 14);
  const Grid2D grid = build_grid_2d(g.x1, g.x2, g.missing, 1, 1);
  const AdditiveData data = make_additive_data(grid, g.y, true);
  const Model2D model = small_model(grid, HyperpriorKind::kAr1, true);
  SamplerSettings s;
  s.iterations = 50;
  const Trace2D a = run_chain_2d(data, model, s, 77);
  const Trace2D b = run_chain_2d(data, model, s, 77);
  CHECK(a.fitted == b.fitted);
  CHECK(a.sigma2 == b.sigma2);
  CHECK(a.z3_summary.mean == b.z3_summary.mean);
  CHECK(a.z3_summary.mean.size() == grid.cells());
}
