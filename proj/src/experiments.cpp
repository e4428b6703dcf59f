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

#include "nsgp/experiments.hpp"

#include "nsgp/error.hpp"
#include "nsgp/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace nsgp {

namespace {

constexpr std::array<double, 11> kBumpT{0.1, 0.13, 0.15, 0.23, 0.25, 0.4,
                                        0.44, 0.65, 0.76, 0.78, 0.81};
constexpr std::array<double, 11> kBumpH{4, 5, 3, 4, 5, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2};
constexpr std::array<double, 11> kBumpW{0.005, 0.005, 0.006, 0.01, 0.01, 0.03,
                                        0.01,  0.01,  0.005, 0.008, 0.005};

void add_noise(Dataset& d, double noise_variance, std::uint64_t seed) {
  Rng rng(seed);
  const double sd = std::sqrt(noise_variance);
  d.y.resize(d.truth.size());
  for (Index i = 0; i < d.truth.size(); ++i) d.y[i] = d.truth[i] + sd * standard_normal(rng);
  d.noise_variance = noise_variance;
}

}  // namespace

Vector Grid1D::nodes() const {
  Vector out(n);
  for (Index i = 0; i < n; ++i) out[i] = node(i);
  return out;
}

Grid1D make_grid(double lo, double hi, Index interior, Index n_ext) {
  if (interior < 2 || !(hi > lo)) {
    fail(ErrorCode::kConfigError, "grid needs at least two interior nodes on a non-empty range");
  }
  if (n_ext < 0) fail(ErrorCode::kConfigError, "extension must be non-negative");
  Grid1D g;
  g.h = (hi - lo) / static_cast<double>(interior - 1);
  g.x0 = lo - static_cast<double>(n_ext) * g.h;
  g.n = interior + 2 * n_ext;
  g.n_ext = n_ext;
  return g;
}

Grid1D extend_domain(const Grid1D& grid, Index n_ext) {
  if (n_ext < 0) fail(ErrorCode::kConfigError, "extension must be non-negative");
  Grid1D g = grid;
  g.x0 -= static_cast<double>(n_ext) * g.h;
  g.n += 2 * n_ext;
  g.n_ext += n_ext;
  return g;
}

ObservationOperator build_observation_operator(const Vector& x, const Grid1D& grid) {
  ObservationOperator a(grid.n);
  const double tol = 1e-9 * grid.h;
  const double last = grid.node(grid.n - 1);
  for (Index r = 0; r < x.size(); ++r) {
    const double xi = x[r];
    if (!(xi >= grid.x0 - tol) || !(xi <= last + tol)) {
      fail(ErrorCode::kOutOfHull, "observation " + std::to_string(xi) +
                                      " lies outside the grid [" + std::to_string(grid.x0) +
                                      ", " + std::to_string(last) + "]");
    }
    const double pos = (xi - grid.x0) / grid.h;
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) * grid.h <= tol) {
      a.add_row(std::clamp<Index>(static_cast<Index>(nearest), 0, grid.n - 1), 1.0);
      continue;
    }
    const Index left = std::clamp<Index>(static_cast<Index>(std::floor(pos)), 0, grid.n - 2);
    const double w = pos - static_cast<double>(left);
    a.add_row(left, 1.0 - w, w);
  }
  return a;
}

Standardized standardize(const Vector& y) {
  if (y.size() < 2) fail(ErrorCode::kInvalidArgument, "standardize needs two values");
  Standardized s;
  s.mean = y.mean();
  const double var =
      (y.array() - s.mean).square().sum() / static_cast<double>(y.size() - 1);
  if (!(var > 0.0)) fail(ErrorCode::kInvalidArgument, "standardize: constant data");
  s.scale = std::sqrt(var);
  s.y = (y.array() - s.mean) / s.scale;
  return s;
}

double experiment1_truth(double x) {
  if (x > 0.0 && x < 5.0) return std::exp(4.0 - 25.0 / (x * (5.0 - x)));
  if (x >= 7.0 && x <= 8.0) return 1.0;
  if (x > 8.0 && x <= 9.0) return -1.0;
  return 0.0;
}

double damped_sine(double x) { return std::exp(-x) * std::cos(2.0 * std::numbers::pi * x); }

double bumps_raw(double t) {
  double acc = 0.0;
  for (std::size_t j = 0; j < kBumpT.size(); ++j) {
    acc += kBumpH[j] * std::pow(1.0 + std::abs(t - kBumpT[j]) / kBumpW[j], -4.0);
  }
  return acc;
}

Dataset gen_experiment1(Index m, double noise_variance, std::uint64_t seed) {
  if (m < 2) fail(ErrorCode::kConfigError, "need at least two observations");
  Dataset d;
  d.name = "exp1";
  d.x = Vector::LinSpaced(m, 0.0, 10.0);
  d.truth = d.x.unaryExpr(&experiment1_truth);
  add_noise(d, noise_variance, seed);
  return d;
}

Dataset gen_damped_sine(Index m, double noise_variance, std::uint64_t seed) {
  if (m < 2) fail(ErrorCode::kConfigError, "need at least two observations");
  Dataset d;
  d.name = "exp2";
  d.x = Vector::LinSpaced(m, 0.0, 8.0);
  d.truth = d.x.unaryExpr(&damped_sine);
  add_noise(d, noise_variance, seed);
  return d;
}

Dataset gen_bumps(Index m, double snr, std::uint64_t seed) {
  if (m < 2) fail(ErrorCode::kConfigError, "need at least two observations");
  if (!(snr > 0.0)) fail(ErrorCode::kConfigError, "signal-to-noise ratio must be positive");
  Dataset d;
  d.name = "exp3";
  d.x = Vector::LinSpaced(m, 0.0, 1.0);
  d.truth = standardize(d.x.unaryExpr(&bumps_raw)).y;
  add_noise(d, 1.0 / (snr * snr), seed);
  return d;
}

Dataset gen_additive_2d(Index n1, Index n2, double noise_variance, std::uint64_t seed) {
  if (n1 < 2 || n2 < 2) fail(ErrorCode::kConfigError, "2-D grid needs two nodes per axis");
  Dataset d;
  d.name = "additive2d";
  d.n1 = n1;
  d.n2 = n2;
  const Vector a1 = Vector::LinSpaced(n1, 0.0, 10.0);
  const Vector a2 = Vector::LinSpaced(n2, 0.0, 10.0);
  const Index m = n1 * n2;
  d.x.resize(m);
  d.x2.resize(m);
  d.truth.resize(m);
  for (Index i = 0; i < n1; ++i) {
    for (Index j = 0; j < n2; ++j) {
      const Index c = i * n2 + j;
      d.x[c] = a1[i];
      d.x2[c] = a2[j];
      d.truth[c] = experiment1_truth(a1[i]) + experiment1_truth(a2[j]);
    }
  }
  d.missing.assign(static_cast<std::size_t>(m), 0);
  add_noise(d, noise_variance, seed);
  return d;
}

Grid1D experiment1_grid(Index n) {
  if (n < 85 || (n - 1) % 84 != 0) {
    fail(ErrorCode::kConfigError, "first-experiment grids have n = 84 r + 1 nodes (85, 169, 253)");
  }
  const Index r = (n - 1) / 84;
  return make_grid(0.0, 10.0, 80 * r + 1, 2 * r);
}

std::pair<double, double> covariate_distance_range(const Vector& x) {
  if (x.size() < 2) fail(ErrorCode::kInvalidArgument, "need two locations");
  std::vector<double> s(x.data(), x.data() + x.size());
  std::sort(s.begin(), s.end());
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double gap = s[i] - s[i - 1];
    if (gap > 0.0) min_gap = std::min(min_gap, gap);
  }
  const double span = s.back() - s.front();
  if (!(span > 0.0)) fail(ErrorCode::kInvalidRange, "all locations coincide");
  return {min_gap, span};
}

}  // namespace nsgp
