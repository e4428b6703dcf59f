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

#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace nsgp {

namespace {

// Normalized autocorrelations rho_0..rho_{N-1}.
std::vector<double> autocorrelation(const std::vector<double>& x) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::size_t len = 1;
  while (len < 2 * n) len <<= 1;
  std::vector<double> padded(len, 0.0);
  for (std::size_t i = 0; i < n; ++i) padded[i] = x[i] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, padded);
  for (auto& c : spec) c = std::complex<double>(std::norm(c), 0.0);
  std::vector<double> acov;
  fft.inv(acov, spec);
  std::vector<double> rho(n);
  const double c0 = acov[0];
  for (std::size_t k = 0; k < n; ++k) rho[k] = acov[k] / c0;
  return rho;
}

}  // namespace

double ess(const std::vector<double>& chain) {
  const std::size_t n = chain.size();
  if (n < 10) fail(ErrorCode::kInvalidArgument, "ESS needs at least 10 samples");
  const auto [lo, hi] = std::minmax_element(chain.begin(), chain.end());
  if (*lo == *hi) fail(ErrorCode::kDegenerateChain, "chain is constant");
  const std::vector<double> rho = autocorrelation(chain);
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < n; k += 2) {
    double pair = rho[k] + rho[k + 1];
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    sum += pair;
    prev = pair;
  }
  const double iact = std::max(-1.0 + 2.0 * sum, 1.0 / static_cast<double>(n));
  return std::min(static_cast<double>(n), static_cast<double>(n) / iact);
}

double ess(const Vector& chain) {
  return ess(std::vector<double>(chain.data(), chain.data() + chain.size()));
}

double geweke_z(const Vector& chain, double first, double last) {
  const Index n = chain.size();
  const Index na = static_cast<Index>(std::floor(first * static_cast<double>(n)));
  const Index nb = static_cast<Index>(std::floor(last * static_cast<double>(n)));
  if (na < 10 || nb < 10 || na + nb > n) {
    fail(ErrorCode::kInvalidArgument, "chain too short for the Geweke windows");
  }
  const Vector a = chain.head(na);
  const Vector b = chain.tail(nb);
  auto mean_var = [](const Vector& v) {
    const double m = v.mean();
    return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
  };
  const double va = mean_var(a) / ess(a);
  const double vb = mean_var(b) / ess(b);
  return (a.mean() - b.mean()) / std::sqrt(va + vb);
}

double oes(double ess_value, double cpu_minutes) {
  if (!(cpu_minutes > 0.0)) fail(ErrorCode::kInvalidArgument, "CPU time must be positive");
  return ess_value / cpu_minutes;
}

double mae(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size() || truth.size() == 0) {
    fail(ErrorCode::kDimensionMismatch, "mae: length mismatch");
  }
  return (estimate - truth).cwiseAbs().mean();
}

double ec(const CredibleBand& band, const Vector& truth) {
  if (band.lo.size() != truth.size() || band.hi.size() != truth.size() || truth.size() == 0) {
    fail(ErrorCode::kDimensionMismatch, "ec: length mismatch");
  }
  Index inside = 0;
  for (Index i = 0; i < truth.size(); ++i) {
    if (truth[i] >= band.lo[i] && truth[i] <= band.hi[i]) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(truth.size());
}

double quantile(std::vector<double> sample, double p) {
  if (sample.empty()) fail(ErrorCode::kInvalidArgument, "quantile of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double pos = p * static_cast<double>(sample.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sample.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sample[lo] + frac * (sample[hi] - sample[lo]);
}

CredibleBand credible_band(const Matrix& trace, double level) {
  if (trace.rows() == 0) fail(ErrorCode::kInvalidArgument, "credible band of an empty trace");
  const double tail = 0.5 * (1.0 - level);
  CredibleBand band{Vector(trace.cols()), Vector(trace.cols())};
  for (Index c = 0; c < trace.cols(); ++c) {
    std::vector<double> col(static_cast<std::size_t>(trace.rows()));
    for (Index r = 0; r < trace.rows(); ++r) col[static_cast<std::size_t>(r)] = trace(r, c);
    band.lo[c] = quantile(col, tail);
    band.hi[c] = quantile(std::move(col), 1.0 - tail);
  }
  return band;
}

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) fail(ErrorCode::kInvalidArgument, "KS test of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  const double x = d * (sn + 0.12 + 0.11 / sn);
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return {d, std::clamp(p, 0.0, 1.0)};
}

std::string FitReport::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["sampler"] = sampler;
  j["hyperprior"] = hyperprior;
  j["iterations"] = iterations;
  j["burnin"] = burnin;
  j["thin"] = thin;
  j["kept"] = kept;
  j["ess"] = ess;
  if (!ess.empty()) {
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& [k, v] : ess) lowest = std::min(lowest, v);
    j["ess_min"] = lowest;
  }
  j["acceptance"] = acceptance;
  if (mae) j["mae"] = *mae;
  if (ec) j["ec"] = *ec;
  if (ec_grid) j["ec_grid"] = *ec_grid;
  if (burn_minutes) j["burn_minutes"] = *burn_minutes;
  if (kept_minutes) j["kept_minutes"] = *kept_minutes;
  if (cpu_minutes) j["cpu_minutes"] = *cpu_minutes;
  if (oes) j["oes"] = *oes;
  j["lambda_mean"] = lambda_mean;
  j["sigma2_mean"] = sigma2_mean;
  if (!posterior_mean.empty()) {
    j["posterior_mean"] = posterior_mean;
    j["band_lo"] = band_lo;
    j["band_hi"] = band_hi;
  }
  if (!grid_x.empty()) {
    j["grid_x"] = grid_x;
    j["ell_mean"] = ell_mean;
    j["ell_lo"] = ell_lo;
    j["ell_hi"] = ell_hi;
  }
  return j.dump(2) + "\n";
}

}  // namespace nsgp
