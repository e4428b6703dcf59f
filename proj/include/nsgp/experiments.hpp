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

#ifndef NSGP_EXPERIMENTS_HPP
#define NSGP_EXPERIMENTS_HPP

#include "nsgp/observation.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nsgp {

/// Uniform grid x_i = x0 + i h, i = 0..n-1, whose first and last `n_ext`
/// nodes pad the data region.
struct Grid1D {
  double x0 = 0.0;
  double h = 1.0;
  Index n = 0;
  Index n_ext = 0;

  double node(Index i) const { return x0 + static_cast<double>(i) * h; }
  Vector nodes() const;
  Index interior_begin() const { return n_ext; }
  Index interior_size() const { return n - 2 * n_ext; }
};

/// `interior` equispaced nodes spanning [lo, hi] plus `n_ext` nodes per side.
Grid1D make_grid(double lo, double hi, Index interior, Index n_ext);

/// Adds `n_ext` nodes to each side.
Grid1D extend_domain(const Grid1D& grid, Index n_ext);

/// Rows pick a node (within 1e-9 h) or interpolate linearly between the two
/// bracketing nodes. Throws kOutOfHull outside [x_0, x_{n-1}].
ObservationOperator build_observation_operator(const Vector& x, const Grid1D& grid);

struct Standardized {
  Vector y;
  double mean = 0.0;
  double scale = 1.0;
};

/// Zero mean, unit sample standard deviation (divisor m - 1).
Standardized standardize(const Vector& y);

struct Dataset {
  std::string name;
  Vector x;
  Vector x2;  // second coordinate, 2-D data only
  Vector y;
  Vector truth;  // noise-free signal at the observation locations
  std::vector<std::uint8_t> missing;  // 2-D only
  double noise_variance = 0.0;
  Index n1 = 0;  // 2-D grid shape
  Index n2 = 0;

  bool two_dimensional() const { return x2.size() > 0; }
};

/// exp(4 - 25 / (x (5 - x))) on (0, 5), 1 on [7, 8], -1 on (8, 9], 0 elsewhere.
double experiment1_truth(double x);
/// exp(-x) cos(2 pi x).
double damped_sine(double x);
/// Donoho-Johnstone bumps with the canonical eleven bump locations.
double bumps_raw(double t);

Dataset gen_experiment1(Index m, double noise_variance, std::uint64_t seed);
Dataset gen_damped_sine(Index m, double noise_variance, std::uint64_t seed);
/// Bumps signal scaled to mean 0, variance 1, observed with noise of
/// variance 1 / snr^2.
Dataset gen_bumps(Index m, double snr, std::uint64_t seed);
/// y(x1, x2) = f(x1) + f(x2) + noise on an n1 x n2 grid over [0, 10]^2 with
/// f the first-experiment signal; rows are ordered by x1, then x2.
Dataset gen_additive_2d(Index n1, Index n2, double noise_variance, std::uint64_t seed);

/// Grid for the first experiment at n = 84 r + 1 nodes: 80 r + 1 interior
/// nodes on [0, 10] and 2 r extension nodes per side.
Grid1D experiment1_grid(Index n);

/// Smallest and largest pairwise distances of sorted, distinct locations.
std::pair<double, double> covariate_distance_range(const Vector& x);

}  // namespace nsgp

#endif  // NSGP_EXPERIMENTS_HPP
