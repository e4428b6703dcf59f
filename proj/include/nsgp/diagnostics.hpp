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

#ifndef NSGP_DIAGNOSTICS_HPP
#define NSGP_DIAGNOSTICS_HPP

#include "nsgp/banded.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nsgp {

/// Effective sample size via FFT autocorrelations and the initial monotone
/// sequence estimator, clipped to (0, N]. Throws kDegenerateChain for a
/// constant chain and kInvalidArgument below 10 samples.
double ess(const std::vector<double>& chain);
double ess(const Vector& chain);

/// Geweke z-score comparing the first `first` and last `last` fractions.
double geweke_z(const Vector& chain, double first = 0.1, double last = 0.5);

/// Overall efficiency: ESS per CPU minute.
double oes(double ess_value, double cpu_minutes);

double mae(const Vector& estimate, const Vector& truth);

struct CredibleBand {
  Vector lo;
  Vector hi;
};

/// Empirical coverage: fraction of truth values inside [lo, hi].
double ec(const CredibleBand& band, const Vector& truth);

/// Type-7 quantile of a sample.
double quantile(std::vector<double> sample, double p);

/// Per-column central band of a samples-by-coordinates matrix.
CredibleBand credible_band(const Matrix& trace, double level = 0.95);

/// One-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);
double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

/// Summary of one fit, serialized to report.json.
struct FitReport {
  std::string model;
  std::string sampler;
  std::string hyperprior;
  long long iterations = 0;
  long long burnin = 0;
  long long thin = 1;
  long long kept = 0;
  std::map<std::string, double> ess;  // per tracked parameter
  std::map<std::string, double> acceptance;
  std::optional<double> mae;
  std::optional<double> ec;       // at observation locations
  std::optional<double> ec_grid;  // at interior grid nodes
  std::optional<double> burn_minutes;
  std::optional<double> kept_minutes;
  std::optional<double> cpu_minutes;
  std::optional<double> oes;
  std::vector<double> posterior_mean;  // at observation locations
  std::vector<double> band_lo;
  std::vector<double> band_hi;
  std::vector<double> grid_x;  // interior grid nodes
  std::vector<double> ell_mean;
  std::vector<double> ell_lo;
  std::vector<double> ell_hi;
  double lambda_mean = 0.0;
  double sigma2_mean = 0.0;

  std::string to_json() const;
};

}  // namespace nsgp

#endif  // NSGP_DIAGNOSTICS_HPP
