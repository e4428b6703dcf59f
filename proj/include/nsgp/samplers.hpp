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

#ifndef NSGP_SAMPLERS_HPP
#define NSGP_SAMPLERS_HPP

#include "nsgp/error.hpp"
#include "nsgp/hyperprior.hpp"
#include "nsgp/observation.hpp"
#include "nsgp/rng.hpp"
#include "nsgp/spde.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace nsgp {

enum class SamplerKind { kMwg, kWellss, kMellss };

const char* sampler_name(SamplerKind kind) noexcept;
SamplerKind parse_sampler(const std::string& name);

/// Normal prior on a log-scale scalar, log density up to a constant.
struct GaussianPrior {
  double mean = 0.0;
  double var = 1.0;
  double logpdf(double x) const { return -0.5 * (x - mean) * (x - mean) / var; }
};

/// Model constants shared by every sampler.
struct ModelConfig {
  SpdeConfig spde;
  /// kind, tau_ell, mu_ell; n and h are taken from `spde`, lambda from the state.
  HyperpriorSpec prior;
  GaussianPrior log_lambda{0.0, 3.0};
  GaussianPrior log_sigma2{0.0, 10.0};

  HyperpriorSpec prior_at(double log_lambda) const;
  void validate() const;
};

struct SamplerSettings {
  Index iterations = 1000;
  double burnin_fraction = 0.2;
  Index thin = 1;
  double initial_scale = 0.5;
  double site_scale = 0.1;
  /// false targets the prior: the data are replaced by an empty operator.
  bool use_likelihood = true;
  bool update_sigma2 = true;
  bool update_u = true;
  bool update_lambda = true;
  bool record_z = true;
  bool record_u = true;
  /// Overrides the data-driven starting values when finite.
  double init_log_sigma2 = std::numeric_limits<double>::quiet_NaN();
  double init_log_lambda = std::numeric_limits<double>::quiet_NaN();

  Index burnin() const;
  Index kept() const;
  void validate() const;
};

struct Data1D {
  ObservationOperator a;
  Vector y;
};

/// Random-walk scale adapted in batches of 50 tries towards 44% acceptance.
struct AdaptiveScale {
  static constexpr int kBatch = 50;
  static constexpr double kTarget = 0.44;
  static constexpr double kMin = 1e-6;
  static constexpr double kMax = 1e3;

  double scale = 0.5;
  bool frozen = false;
  int batch_tries = 0;
  int batch_accepts = 0;
  std::int64_t batches = 0;
  std::int64_t tries = 0;
  std::int64_t accepts = 0;

  void record(bool accepted);
  double acceptance_rate() const {
    return tries == 0 ? 0.0 : static_cast<double>(accepts) / static_cast<double>(tries);
  }
};

struct AdaptState {
  AdaptiveScale sigma2;
  AdaptiveScale lambda;
  std::vector<AdaptiveScale> sites;

  void freeze();
};

struct ChainState {
  Vector z;
  Vector u;
  Vector zeta;
  Vector xi;
  double log_lambda = 0.0;
  double log_sigma2 = 0.0;
  AdaptState adapt;
  /// Likelihood at the current state: conditional on z for MWG and
  /// w-ELL-SS, marginal for m-ELL-SS.
  double loglik = 0.0;
  std::int64_t site_decisions = 0;
  std::int64_t slice_shrinks = 0;

  double sigma2() const { return std::exp(log_sigma2); }
  double lambda() const { return std::exp(log_lambda); }
};

struct Trace {
  SamplerKind kind = SamplerKind::kMellss;
  Index iterations = 0;
  Index burnin = 0;
  Index thin = 1;
  Matrix z;  // one row per kept sample
  Matrix u;
  std::vector<double> lambda;
  std::vector<double> sigma2;
  std::vector<Index> iteration_index;
  std::vector<double> elapsed_seconds;  // since chain start, per kept sample
  double burn_seconds = 0.0;
  double kept_seconds = 0.0;
  double accept_sigma2 = 0.0;
  double accept_lambda = 0.0;
  double accept_sites = 0.0;
  double final_scale_sigma2 = 0.0;
  double final_scale_lambda = 0.0;

  Index samples() const { return static_cast<Index>(lambda.size()); }
};

struct RwResult {
  double x;
  double logpost;
  bool accepted;
};

/// One Metropolis step x' = x + s N(0, 1) on a log-scale scalar. `logpost_x`
/// must be finite; non-finite proposals are rejected.
template <class LogPost>
RwResult adaptive_rw_step(const LogPost& logpost, double x, double logpost_x,
                          AdaptiveScale& scale, Rng& rng) {
  if (!std::isfinite(logpost_x)) {
    fail(ErrorCode::kNonFiniteLogPost, "log posterior is not finite at the current state");
  }
  const double proposal = x + scale.scale * standard_normal(rng);
  const double lp = logpost(proposal);
  const double log_u = std::log(uniform01(rng));
  const bool accept = std::isfinite(lp) && log_u < lp - logpost_x;
  scale.record(accept);
  return accept ? RwResult{proposal, lp, true} : RwResult{x, logpost_x, false};
}

struct SliceResult {
  Vector v;
  double loglik;
  int shrinks;
};

/// Elliptical slice move for a N(0, I) prior with the ellipse direction
/// `nu`, threshold `loglik_v + log_u` and initial angle `theta` supplied.
template <class LogLik>
SliceResult ess_slice_step(const LogLik& loglik, const Vector& v, double loglik_v,
                           const Vector& nu, double log_u, double theta, Rng& rng,
                           int max_shrinks = 200) {
  const double threshold = loglik_v + log_u;
  double lo = theta - 2.0 * std::numbers::pi;
  double hi = theta;
  for (int shrinks = 0;; ++shrinks) {
    Vector candidate = v * std::cos(theta) + nu * std::sin(theta);
    const double ll = loglik(candidate);
    if (std::isfinite(ll) && ll > threshold) return {std::move(candidate), ll, shrinks};
    if (shrinks >= max_shrinks) return {v, loglik_v, shrinks};
    if (theta < 0.0) {
      lo = theta;
    } else {
      hi = theta;
    }
    theta = uniform(rng, lo, hi);
  }
}

template <class LogLik>
SliceResult ess_slice_step(const LogLik& loglik, const Vector& v, double loglik_v,
                           Rng& rng) {
  const Vector nu = standard_normal_vector(rng, v.size());
  const double log_u = std::log(uniform01(rng));
  const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  return ess_slice_step(loglik, v, loglik_v, nu, log_u, theta, rng);
}

/// Starting state: zeta = 0, log lambda at its prior mean, log sigma2 from
/// the first differences of y, z at its conditional posterior mean.
ChainState initial_state(SamplerKind kind, const Data1D& data,
                         const ModelConfig& model, const SamplerSettings& settings);

void mwg_iteration(ChainState& state, const Data1D& data, const ModelConfig& model,
                   const SamplerSettings& settings, Rng& rng);
void wellss_iteration(ChainState& state, const Data1D& data, const ModelConfig& model,
                      const SamplerSettings& settings, Rng& rng);
void mellss_iteration(ChainState& state, const Data1D& data, const ModelConfig& model,
                      const MarginalLikelihood& marginal,
                      const SamplerSettings& settings, Rng& rng);

/// Length-scale field implied by (zeta, log lambda).
Vector field_from_state(const ModelConfig& model, const Vector& zeta, double log_lambda);

/// Runs one chain; bit-for-bit reproducible for a given seed.
Trace run_chain(SamplerKind kind, const Data1D& data, const ModelConfig& model,
                const SamplerSettings& settings, std::uint64_t seed);

}  // namespace nsgp

#endif  // NSGP_SAMPLERS_HPP
