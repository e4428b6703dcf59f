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

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

namespace nsgp {

namespace {

constexpr double kNodeTolerance = 1e-6;

bool pinned(const Model2D& model) { return model.prior.kind == HyperpriorKind::kConst; }

struct AxisLayout {
  Grid1D grid;
  std::vector<Index> node_of_row;
};

AxisLayout place_axis(const Vector& x, Index n_ext, const char* label) {
  std::vector<double> v(x.data(), x.data() + x.size());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  if (v.size() < 2) {
    fail(ErrorCode::kConfigError, std::string("axis ") + label + " needs two distinct locations");
  }
  double gap = v[1] - v[0];
  for (std::size_t i = 2; i < v.size(); ++i) gap = std::min(gap, v[i] - v[i - 1]);
  const double span = v.back() - v.front();
  const Index interior = static_cast<Index>(std::llround(span / gap)) + 1;
  AxisLayout out;
  out.grid = make_grid(v.front(), v.back(), interior, n_ext);
  const double h = out.grid.h;
  out.node_of_row.resize(static_cast<std::size_t>(x.size()));
  for (Index r = 0; r < x.size(); ++r) {
    const double pos = (x[r] - v.front()) / h;
    const double idx = std::round(pos);
    if (std::abs(pos - idx) > kNodeTolerance) {
      fail(ErrorCode::kConfigError,
           std::string("axis ") + label + " locations are not on an equispaced grid");
    }
    out.node_of_row[static_cast<std::size_t>(r)] = static_cast<Index>(idx) + n_ext;
  }
  return out;
}

Vector axis_sum(const ObservationOperator& a, const Vector& z) { return a.apply(z); }

double initial_log_sigma2(const AdditiveData& data, const Model2D& model) {
  const Grid2D& g = data.grid;
  std::vector<Index> row_of_cell(static_cast<std::size_t>(g.cells()), -1);
  for (Index r = 0; r < data.rows(); ++r) {
    if (!data.row_imputed[static_cast<std::size_t>(r)]) {
      row_of_cell[static_cast<std::size_t>(data.row_cell[static_cast<std::size_t>(r)])] = r;
    }
  }
  std::vector<double> d;
  for (Index i1 = 0; i1 < g.n1(); ++i1) {
    for (Index i2 = 0; i2 + 1 < g.n2(); ++i2) {
      const Index a = row_of_cell[static_cast<std::size_t>(g.cell(i1, i2))];
      const Index b = row_of_cell[static_cast<std::size_t>(g.cell(i1, i2 + 1))];
      if (a >= 0 && b >= 0) d.push_back(data.y[b] - data.y[a]);
    }
  }
  if (d.size() < 3) return model.log_sigma2.mean;
  const Eigen::Map<const Vector> dv(d.data(), static_cast<Index>(d.size()));
  const double mean = dv.mean();
  const double var = (dv.array() - mean).square().sum() / static_cast<double>(d.size() - 1);
  if (!(var > 0.0) || !std::isfinite(var)) return model.log_sigma2.mean;
  return std::log(var / 2.0);
}

Vector prior_draw_1d(const Vector& u, const SpdeConfig& cfg, Rng& rng) {
  return sample_latent(u, 1.0, ObservationOperator(cfg.n), Vector(0),
                       standard_normal_vector(rng, cfg.n), cfg);
}

KroneckerEigen interaction_eigen(const AdditiveState& s, const Model2D& model) {
  return kronecker_eigen(precision(s.u[2], model.spde1), precision(s.u[3], model.spde2));
}

Vector interaction_prior_draw(const KroneckerEigen& eig, Rng& rng) {
  const Index n1 = eig.lambda3.size();
  const Index n2 = eig.lambda4.size();
  Vector coef = standard_normal_vector(rng, n1 * n2);
  for (Index i = 0; i < n1; ++i) {
    for (Index j = 0; j < n2; ++j) coef[i * n2 + j] /= std::sqrt(eig.lambda3[i] * eig.lambda4[j]);
  }
  return kron_mv(eig.e3, eig.e4, coef);
}

}  // namespace

Index Grid2D::count(CellKind k) const {
  return static_cast<Index>(std::count(kind.begin(), kind.end(), k));
}

Grid2D build_grid_2d(const Vector& x1, const Vector& x2,
                     const std::vector<std::uint8_t>& missing, Index ext1, Index ext2) {
  if (x1.size() != x2.size() || (!missing.empty() && missing.size() != static_cast<std::size_t>(x1.size()))) {
    fail(ErrorCode::kDimensionMismatch, "2-D coordinates and missing flags differ in length");
  }
  if (ext1 < 0 || ext2 < 0) fail(ErrorCode::kConfigError, "extension must be non-negative");
  const AxisLayout a1 = place_axis(x1, ext1, "x1");
  const AxisLayout a2 = place_axis(x2, ext2, "x2");
  Grid2D g;
  g.axis1 = a1.grid;
  g.axis2 = a2.grid;
  const auto cells = static_cast<std::size_t>(g.cells());
  g.kind.assign(cells, CellKind::kMissing);
  g.data_row.assign(cells, -1);
  for (Index i1 = 0; i1 < g.n1(); ++i1) {
    const bool out1 = i1 < ext1 || i1 >= g.n1() - ext1;
    for (Index i2 = 0; i2 < g.n2(); ++i2) {
      const bool out2 = i2 < ext2 || i2 >= g.n2() - ext2;
      if (out1 || out2) g.kind[static_cast<std::size_t>(g.cell(i1, i2))] = CellKind::kExtension;
    }
  }
  for (Index r = 0; r < x1.size(); ++r) {
    const auto c = static_cast<std::size_t>(
        g.cell(a1.node_of_row[static_cast<std::size_t>(r)], a2.node_of_row[static_cast<std::size_t>(r)]));
    if (g.data_row[c] >= 0) fail(ErrorCode::kConfigError, "two data rows share a grid cell");
    g.data_row[c] = r;
    const bool absent = !missing.empty() && missing[static_cast<std::size_t>(r)] != 0;
    g.kind[c] = absent ? CellKind::kMissing : CellKind::kObserved;
  }
  return g;
}

AdditiveData make_additive_data(const Grid2D& grid, const Vector& y_by_data_row,
                                bool interaction) {
  AdditiveData d;
  d.grid = grid;
  d.interaction = interaction;
  d.a1 = ObservationOperator(grid.n1());
  d.a2 = ObservationOperator(grid.n2());
  std::vector<double> y;
  double sum = 0.0;
  Index observed = 0;
  for (Index i1 = 0; i1 < grid.n1(); ++i1) {
    for (Index i2 = 0; i2 < grid.n2(); ++i2) {
      const Index c = grid.cell(i1, i2);
      const CellKind k = grid.kind[static_cast<std::size_t>(c)];
      if (k == CellKind::kExtension && !interaction) continue;
      d.row_cell.push_back(c);
      d.a1.add_row(i1, 1.0);
      d.a2.add_row(i2, 1.0);
      if (k == CellKind::kObserved) {
        const Index r = grid.data_row[static_cast<std::size_t>(c)];
        if (r >= y_by_data_row.size()) fail(ErrorCode::kDimensionMismatch, "response vector too short");
        y.push_back(y_by_data_row[r]);
        sum += y_by_data_row[r];
        ++observed;
        d.row_imputed.push_back(0);
      } else {
        y.push_back(0.0);
        d.row_imputed.push_back(1);
      }
    }
  }
  if (observed == 0) fail(ErrorCode::kConfigError, "no observed cells");
  d.y = Eigen::Map<const Vector>(y.data(), static_cast<Index>(y.size()));
  const double mean = sum / static_cast<double>(observed);
  for (Index r = 0; r < d.rows(); ++r) {
    if (d.row_imputed[static_cast<std::size_t>(r)]) d.y[r] = mean;
  }
  return d;
}

KroneckerEigen kronecker_eigen(const BandedMatrix& q3, const BandedMatrix& q4) {
  Eigen::SelfAdjointEigenSolver<Matrix> s3(q3.to_dense());
  Eigen::SelfAdjointEigenSolver<Matrix> s4(q4.to_dense());
  if (s3.info() != Eigen::Success || s4.info() != Eigen::Success) {
    fail(ErrorCode::kInternal, "eigendecomposition did not converge");
  }
  if (s3.eigenvalues().minCoeff() <= 0.0 || s4.eigenvalues().minCoeff() <= 0.0) {
    fail(ErrorCode::kNotPositiveDefinite, "interaction precision is not positive definite");
  }
  return {s3.eigenvectors(), s3.eigenvalues(), s4.eigenvectors(), s4.eigenvalues()};
}

Vector kron_mv(const Matrix& e3, const Matrix& e4, const Vector& alpha) {
  const Index n1 = e3.cols();
  const Index n2 = e4.cols();
  if (alpha.size() != n1 * n2) fail(ErrorCode::kDimensionMismatch, "Kronecker operand size");
  const Eigen::Map<const Matrix> x(alpha.data(), n2, n1);
  const Matrix r = e4 * x * e3.transpose();
  return Eigen::Map<const Vector>(r.data(), r.size());
}

Vector z3_posterior_draw(const KroneckerEigen& eig, double sigma2, const Vector& y,
                         const Vector& noise) {
  const Index n1 = eig.lambda3.size();
  const Index n2 = eig.lambda4.size();
  if (y.size() != n1 * n2 || noise.size() != n1 * n2) {
    fail(ErrorCode::kDimensionMismatch, "interaction draw size");
  }
  Vector coef = kron_mv(eig.e3.transpose(), eig.e4.transpose(), y);
  for (Index i = 0; i < n1; ++i) {
    for (Index j = 0; j < n2; ++j) {
      const Index k = i * n2 + j;
      const double d = eig.lambda3[i] * eig.lambda4[j] + 1.0 / sigma2;
      coef[k] = coef[k] / (sigma2 * d) + noise[k] / std::sqrt(d);
    }
  }
  return kron_mv(eig.e3, eig.e4, coef);
}

double block_marginal_loglik_1d(const Vector& u, double sigma2,
                                const ObservationOperator& a, const Vector& y,
                                const SpdeConfig& cfg) {
  return marginal_loglik(u, sigma2, a, y, cfg);
}

double block_marginal_loglik_interaction(const KroneckerEigen& eig, double sigma2,
                                         const Vector& y) {
  const Index n1 = eig.lambda3.size();
  const Index n2 = eig.lambda4.size();
  if (y.size() != n1 * n2) fail(ErrorCode::kDimensionMismatch, "interaction data size");
  const Vector alpha = kron_mv(eig.e3.transpose(), eig.e4.transpose(), y);
  double logdet = 0.0;
  double quad = 0.0;
  for (Index i = 0; i < n1; ++i) {
    for (Index j = 0; j < n2; ++j) {
      const double c = 1.0 / (eig.lambda3[i] * eig.lambda4[j]) + sigma2;
      const double a = alpha[i * n2 + j];
      logdet += std::log(c);
      quad += a * a / c;
    }
  }
  const double m = static_cast<double>(y.size());
  return -0.5 * (m * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

HyperpriorSpec Model2D::prior_at(int field, double log_lambda) const {
  HyperpriorSpec s = prior;
  s.n = spde(field).n;
  s.h = spde(field).h;
  s.lambda = std::exp(log_lambda);
  return s;
}

void Model2D::validate() const {
  spde1.validate();
  spde2.validate();
  prior_at(0, log_lambda.mean).validate();
  prior_at(1, log_lambda.mean).validate();
  if (!(log_lambda.var > 0.0) || !(log_sigma2.var > 0.0)) {
    fail(ErrorCode::kConfigError, "prior variances must be positive");
  }
}

Vector AdditiveState::fitted(const AdditiveData& data) const {
  Vector f = axis_sum(data.a1, z1) + axis_sum(data.a2, z2);
  if (data.interaction) f += z3;
  return f;
}

Vector field_from_state_2d(const Model2D& model, int field, const Vector& zeta,
                           double log_lambda) {
  if (pinned(model)) return Vector::Constant(model.spde(field).n, log_lambda);
  return unwhiten(model.prior_at(field, log_lambda), zeta);
}

AdditiveState initial_state_2d(const AdditiveData& data, const Model2D& model,
                               const SamplerSettings& settings) {
  model.validate();
  if (data.a1.cols() != model.spde1.n || data.a2.cols() != model.spde2.n) {
    fail(ErrorCode::kDimensionMismatch, "data do not match the model grids");
  }
  AdditiveState s;
  const int fields = data.interaction ? 4 : 2;
  const double l0 = std::isfinite(settings.init_log_lambda) ? settings.init_log_lambda
                                                            : model.log_lambda.mean;
  for (int f = 0; f < 4; ++f) {
    s.log_lambda[static_cast<std::size_t>(f)] = l0;
    s.lambda_scale[static_cast<std::size_t>(f)].scale = settings.initial_scale;
    if (f >= fields) continue;
    Vector& zeta = s.zeta[static_cast<std::size_t>(f)];
    if (!pinned(model)) zeta = Vector::Zero(model.spde(f).n);
    s.u[static_cast<std::size_t>(f)] = field_from_state_2d(model, f, zeta, l0);
  }
  s.log_sigma2 = std::isfinite(settings.init_log_sigma2) ? settings.init_log_sigma2
                                                         : initial_log_sigma2(data, model);
  s.sigma2_scale.scale = settings.initial_scale;
  const Index n1 = model.spde1.n;
  const Index n2 = model.spde2.n;
  s.z1 = sample_latent(s.u[0], s.sigma2(), data.a1, data.y, Vector::Zero(n1), model.spde1);
  s.z2 = sample_latent(s.u[1], s.sigma2(), data.a2, data.y - data.a1.apply(s.z1),
                       Vector::Zero(n2), model.spde2);
  if (data.interaction) s.z3 = Vector::Zero(n1 * n2);
  return s;
}

void impute_missing(AdditiveState& state, AdditiveData& data, Rng& rng) {
  const double sd = std::sqrt(state.sigma2());
  const Vector fit = state.fitted(data);
  for (Index r = 0; r < data.rows(); ++r) {
    if (data.row_imputed[static_cast<std::size_t>(r)]) data.y[r] = fit[r] + sd * standard_normal(rng);
  }
}

void block_mellss_iteration(AdditiveState& state, AdditiveData& data,
                            const Model2D& model, const SamplerSettings& settings,
                            Rng& rng) {
  const bool lik = settings.use_likelihood;
  const bool free_u = settings.update_u && !pinned(model);

  if (settings.update_sigma2) {
    const Vector fit = state.fitted(data);
    auto lp = [&](double x) {
      return (lik ? gaussian_loglik(data.y, fit, std::exp(x)) : 0.0) + model.log_sigma2.logpdf(x);
    };
    state.log_sigma2 =
        adaptive_rw_step(lp, state.log_sigma2, lp(state.log_sigma2), state.sigma2_scale, rng).x;
  }
  const double s2 = state.sigma2();

  for (int f = 0; f < 2; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    const ObservationOperator& a = f == 0 ? data.a1 : data.a2;
    const ObservationOperator& other = f == 0 ? data.a2 : data.a1;
    const SpdeConfig& cfg = model.spde(f);
    Vector resid = data.y - other.apply(f == 0 ? state.z2 : state.z1);
    if (data.interaction) resid -= state.z3;
    const MarginalLikelihood marginal(a, resid, cfg);
    auto ll_u = [&](const Vector& u) { return lik ? marginal(u, s2) : 0.0; };

    if (free_u) {
      const HyperpriorSpec spec = model.prior_at(f, state.log_lambda[fi]);
      auto ll = [&](const Vector& zeta) { return ll_u(unwhiten(spec, zeta)); };
      const SliceResult res = ess_slice_step(ll, state.zeta[fi], ll_u(state.u[fi]), rng);
      state.zeta[fi] = res.v;
      state.u[fi] = unwhiten(spec, res.v);
    }
    if (settings.update_lambda) {
      auto lp = [&](double x) {
        return ll_u(field_from_state_2d(model, f, state.zeta[fi], x)) + model.log_lambda.logpdf(x);
      };
      const double cur = ll_u(state.u[fi]) + model.log_lambda.logpdf(state.log_lambda[fi]);
      const RwResult r =
          adaptive_rw_step(lp, state.log_lambda[fi], cur, state.lambda_scale[fi], rng);
      if (r.accepted) {
        state.log_lambda[fi] = r.x;
        state.u[fi] = field_from_state_2d(model, f, state.zeta[fi], r.x);
      }
    }
    Vector z = lik ? sample_latent(state.u[fi], s2, a, resid, standard_normal_vector(rng, cfg.n), cfg)
                   : prior_draw_1d(state.u[fi], cfg, rng);
    (f == 0 ? state.z1 : state.z2) = std::move(z);
  }

  if (data.interaction) {
    const Vector resid = data.y - data.a1.apply(state.z1) - data.a2.apply(state.z2);
    const Index n3 = model.spde1.n;
    const Index n4 = model.spde2.n;
    auto ll_uu = [&](const Vector& u3, const Vector& u4) {
      if (!lik) return 0.0;
      return block_marginal_loglik_interaction(
          kronecker_eigen(precision(u3, model.spde1), precision(u4, model.spde2)), s2, resid);
    };
    if (free_u) {
      const HyperpriorSpec spec3 = model.prior_at(2, state.log_lambda[2]);
      const HyperpriorSpec spec4 = model.prior_at(3, state.log_lambda[3]);
      auto ll = [&](const Vector& zz) {
        return ll_uu(unwhiten(spec3, zz.head(n3)), unwhiten(spec4, zz.tail(n4)));
      };
      Vector stacked(n3 + n4);
      stacked << state.zeta[2], state.zeta[3];
      const SliceResult res = ess_slice_step(ll, stacked, ll_uu(state.u[2], state.u[3]), rng);
      state.zeta[2] = res.v.head(n3);
      state.zeta[3] = res.v.tail(n4);
      state.u[2] = unwhiten(spec3, state.zeta[2]);
      state.u[3] = unwhiten(spec4, state.zeta[3]);
    }
    if (settings.update_lambda) {
      for (int f = 2; f < 4; ++f) {
        const auto fi = static_cast<std::size_t>(f);
        auto with = [&](const Vector& u) {
          return f == 2 ? ll_uu(u, state.u[3]) : ll_uu(state.u[2], u);
        };
        auto lp = [&](double x) {
          return with(field_from_state_2d(model, f, state.zeta[fi], x)) + model.log_lambda.logpdf(x);
        };
        const double cur = with(state.u[fi]) + model.log_lambda.logpdf(state.log_lambda[fi]);
        const RwResult r =
            adaptive_rw_step(lp, state.log_lambda[fi], cur, state.lambda_scale[fi], rng);
        if (r.accepted) {
          state.log_lambda[fi] = r.x;
          state.u[fi] = field_from_state_2d(model, f, state.zeta[fi], r.x);
        }
      }
    }
    const KroneckerEigen eig = interaction_eigen(state, model);
    state.z3 = lik ? z3_posterior_draw(eig, s2, resid, standard_normal_vector(rng, n3 * n4))
                   : interaction_prior_draw(eig, rng);
  }

  impute_missing(state, data, rng);
}

void Welford::add(const Vector& x) {
  if (count == 0) {
    mean = Vector::Zero(x.size());
    m2 = Vector::Zero(x.size());
  }
  ++count;
  const Vector delta = x - mean;
  mean += delta / static_cast<double>(count);
  m2.array() += delta.array() * (x - mean).array();
}

Vector Welford::sd() const {
  if (count < 2) return Vector::Zero(mean.size());
  return (m2 / static_cast<double>(count - 1)).array().sqrt();
}

Trace2D run_chain_2d(const AdditiveData& data_in, const Model2D& model,
                     const SamplerSettings& settings, std::uint64_t seed) {
  settings.validate();
  AdditiveData data = data_in;
  AdditiveState state = initial_state_2d(data, model, settings);
  Rng rng(seed);

  Trace2D trace;
  trace.iterations = settings.iterations;
  trace.burnin = settings.burnin();
  trace.thin = settings.thin;
  const Index kept = settings.kept();
  std::vector<Index> fit_rows;
  for (Index r = 0; r < data.rows(); ++r) {
    const Index c = data.row_cell[static_cast<std::size_t>(r)];
    if (data.grid.kind[static_cast<std::size_t>(c)] != CellKind::kExtension) {
      fit_rows.push_back(r);
      trace.fitted_cells.push_back(c);
    }
  }
  const auto n_fit = static_cast<Index>(fit_rows.size());
  trace.z1.resize(settings.record_z ? kept : 0, model.spde1.n);
  trace.z2.resize(settings.record_z ? kept : 0, model.spde2.n);
  trace.u1.resize(settings.record_u ? kept : 0, model.spde1.n);
  trace.u2.resize(settings.record_u ? kept : 0, model.spde2.n);
  trace.fitted.resize(kept * n_fit <= kMaxStoredFitted ? kept : 0, n_fit);

  auto freeze = [&] {
    state.sigma2_scale.frozen = true;
    for (auto& s : state.lambda_scale) s.frozen = true;
  };
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  if (trace.burnin == 0) freeze();

  Vector fit_cells(n_fit);
  for (Index t = 1; t <= settings.iterations; ++t) {
    block_mellss_iteration(state, data, model, settings, rng);
    if (t == trace.burnin) {
      freeze();
      trace.burn_seconds = seconds();
    }
    if (t > trace.burnin && (t - trace.burnin) % settings.thin == 0) {
      const Index row = trace.samples();
      const double m1 = state.z1.mean();
      const double m2 = state.z2.mean();
      if (settings.record_z) {
        trace.z1.row(row) = (state.z1.array() - m1).matrix().transpose();
        trace.z2.row(row) = (state.z2.array() - m2).matrix().transpose();
      }
      if (settings.record_u) {
        trace.u1.row(row) = state.u[0].transpose();
        trace.u2.row(row) = state.u[1].transpose();
      }
      trace.intercept.push_back(m1 + m2);
      for (std::size_t f = 0; f < 4; ++f) trace.lambda[f].push_back(std::exp(state.log_lambda[f]));
      trace.sigma2.push_back(state.sigma2());
      const Vector fit = state.fitted(data);
      for (Index k = 0; k < n_fit; ++k) fit_cells[k] = fit[fit_rows[static_cast<std::size_t>(k)]];
      if (trace.fitted.rows() > 0) trace.fitted.row(row) = fit_cells.transpose();
      trace.fitted_summary.add(fit_cells);
      if (data.interaction) trace.z3_summary.add(state.z3);
    }
  }
  trace.kept_seconds = seconds() - trace.burn_seconds;
  trace.accept_sigma2 = state.sigma2_scale.acceptance_rate();
  for (std::size_t f = 0; f < 4; ++f) trace.accept_lambda[f] = state.lambda_scale[f].acceptance_rate();
  return trace;
}

}  // namespace nsgp
