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

#include "nsgp/samplers.hpp"

#include <algorithm>
#include <chrono>
#include <optional>

namespace nsgp {

namespace {

bool pinned(const ModelConfig& model) {
  return model.prior.kind == HyperpriorKind::kConst;
}

double initial_log_sigma2(const Data1D& data, const ModelConfig& model) {
  const Index m = data.y.size();
  if (m < 3) return model.log_sigma2.mean;
  const Vector d = data.y.tail(m - 1) - data.y.head(m - 1);
  const double mean = d.mean();
  const double var = (d.array() - mean).square().sum() / static_cast<double>(d.size() - 1);
  if (!(var > 0.0) || !std::isfinite(var)) return model.log_sigma2.mean;
  return std::log(var / 2.0);
}

Vector latent_given_xi(const Vector& u, const Vector& xi, const SpdeConfig& cfg) {
  return solve_banded(build_L(u, cfg), xi);
}

void check_data(const Data1D& data, const ModelConfig& model) {
  if (data.a.cols() != model.spde.n || data.a.rows() != data.y.size()) {
    fail(ErrorCode::kDimensionMismatch, "data do not match the model grid");
  }
}

void rw_sigma2_conditional(ChainState& state, const Data1D& data,
                           const ModelConfig& model, Rng& rng) {
  const Vector fit = data.a.apply(state.z);
  auto lp = [&](double x) {
    return gaussian_loglik(data.y, fit, std::exp(x)) + model.log_sigma2.logpdf(x);
  };
  const RwResult r =
      adaptive_rw_step(lp, state.log_sigma2, lp(state.log_sigma2), state.adapt.sigma2, rng);
  state.log_sigma2 = r.x;
}

}  // namespace

const char* sampler_name(SamplerKind kind) noexcept {
  switch (kind) {
    case SamplerKind::kMwg:
      return "mwg";
    case SamplerKind::kWellss:
      return "wellss";
    case SamplerKind::kMellss:
      return "mellss";
  }
  return "unknown";
}

SamplerKind parse_sampler(const std::string& name) {
  if (name == "mwg") return SamplerKind::kMwg;
  if (name == "wellss") return SamplerKind::kWellss;
  if (name == "mellss") return SamplerKind::kMellss;
  fail(ErrorCode::kConfigError, "unknown sampler '" + name + "'");
}

HyperpriorSpec ModelConfig::prior_at(double log_lambda) const {
  HyperpriorSpec s = prior;
  s.n = spde.n;
  s.h = spde.h;
  s.lambda = std::exp(log_lambda);
  return s;
}

void ModelConfig::validate() const {
  spde.validate();
  prior_at(log_lambda.mean).validate();
  if (!(log_lambda.var > 0.0) || !(log_sigma2.var > 0.0)) {
    fail(ErrorCode::kConfigError, "prior variances must be positive");
  }
}

Index SamplerSettings::burnin() const {
  return static_cast<Index>(std::floor(burnin_fraction * static_cast<double>(iterations)));
}

Index SamplerSettings::kept() const { return (iterations - burnin()) / thin; }

void SamplerSettings::validate() const {
  if (iterations < 1) fail(ErrorCode::kConfigError, "iterations must be positive");
  if (!(burnin_fraction >= 0.0) || !(burnin_fraction < 1.0)) {
    fail(ErrorCode::kConfigError, "burn-in fraction must lie in [0, 1)");
  }
  if (thin < 1) fail(ErrorCode::kConfigError, "thinning must be at least 1");
  if (!(initial_scale > 0.0) || !(site_scale > 0.0)) {
    fail(ErrorCode::kConfigError, "proposal scales must be positive");
  }
}

void AdaptiveScale::record(bool accepted) {
  ++tries;
  if (accepted) ++accepts;
  if (frozen) return;
  ++batch_tries;
  if (accepted) ++batch_accepts;
  if (batch_tries < kBatch) return;
  ++batches;
  const double step = std::min(0.05, 1.0 / std::sqrt(static_cast<double>(batches)));
  const double rate = static_cast<double>(batch_accepts) / static_cast<double>(batch_tries);
  scale *= std::exp(rate > kTarget ? step : -step);
  scale = std::clamp(scale, kMin, kMax);
  batch_tries = 0;
  batch_accepts = 0;
}

void AdaptState::freeze() {
  sigma2.frozen = true;
  lambda.frozen = true;
  for (auto& s : sites) s.frozen = true;
}

Vector field_from_state(const ModelConfig& model, const Vector& zeta, double log_lambda) {
  if (pinned(model)) return Vector::Constant(model.spde.n, log_lambda);
  return unwhiten(model.prior_at(log_lambda), zeta);
}

ChainState initial_state(SamplerKind kind, const Data1D& data,
                         const ModelConfig& model, const SamplerSettings& settings) {
  check_data(data, model);
  const Index n = model.spde.n;
  ChainState s;
  s.log_lambda = std::isfinite(settings.init_log_lambda) ? settings.init_log_lambda
                                                         : model.log_lambda.mean;
  s.log_sigma2 = std::isfinite(settings.init_log_sigma2) ? settings.init_log_sigma2
                                                         : initial_log_sigma2(data, model);
  if (!pinned(model)) s.zeta = Vector::Zero(n);
  s.u = field_from_state(model, s.zeta, s.log_lambda);
  s.z = sample_latent(s.u, s.sigma2(), data.a, data.y, Vector::Zero(n), model.spde);
  s.xi = build_L(s.u, model.spde).multiply(s.z);
  s.adapt.sigma2.scale = settings.initial_scale;
  s.adapt.lambda.scale = settings.initial_scale;
  if (kind == SamplerKind::kMwg) {
    AdaptiveScale site;
    site.scale = settings.site_scale;
    s.adapt.sites.assign(static_cast<std::size_t>(n), site);
  }
  if (kind == SamplerKind::kMellss) {
    s.loglik = marginal_loglik(s.u, s.sigma2(), data.a, data.y, model.spde);
  } else {
    s.loglik = gaussian_loglik(data.y, data.a.apply(s.z), s.sigma2());
  }
  return s;
}

void mwg_iteration(ChainState& state, const Data1D& data, const ModelConfig& model,
                   const SamplerSettings& settings, Rng& rng) {
  const SpdeConfig& cfg = model.spde;
  const Index n = cfg.n;
  if (settings.update_sigma2) rw_sigma2_conditional(state, data, model, rng);

  state.z = sample_latent(state.u, state.sigma2(), data.a, data.y,
                          standard_normal_vector(rng, n), cfg);

  if (settings.update_u && !pinned(model)) {
    const HyperpriorSpec spec = model.prior_at(state.log_lambda);
    double logdet = log_abs_det_L(state.u, cfg);
    for (Index k = 0; k < n; ++k) {
      AdaptiveScale& sc = state.adapt.sites[static_cast<std::size_t>(k)];
      const double proposal = state.u[k] + sc.scale * standard_normal(rng);
      double logdet_new = 0.0;
      const double ratio =
          logratio_prior_z_site(state.z, state.u, k, proposal, cfg, logdet, &logdet_new) +
          logratio_u_site(spec, state.u, k, proposal);
      const bool accept = std::isfinite(ratio) && std::log(uniform01(rng)) < ratio;
      sc.record(accept);
      ++state.site_decisions;
      if (accept) {
        state.u[k] = proposal;
        logdet = logdet_new;
      }
    }
  }

  if (settings.update_lambda) {
    if (pinned(model)) {
      auto lp = [&](double x) {
        return log_prior_z(state.z, build_L(Vector::Constant(n, x), cfg)) +
               model.log_lambda.logpdf(x);
      };
      const RwResult r =
          adaptive_rw_step(lp, state.log_lambda, lp(state.log_lambda), state.adapt.lambda, rng);
      state.log_lambda = r.x;
      state.u = Vector::Constant(n, r.x);
    } else {
      const HyperpriorSpec old_spec = model.prior_at(state.log_lambda);
      auto lp = [&](double x) {
        return logratio_lambda(model.prior_at(x), old_spec, state.u) +
               model.log_lambda.logpdf(x);
      };
      const RwResult r = adaptive_rw_step(lp, state.log_lambda,
                                          model.log_lambda.logpdf(state.log_lambda),
                                          state.adapt.lambda, rng);
      state.log_lambda = r.x;
    }
  }

  if (!pinned(model)) state.zeta = whiten(model.prior_at(state.log_lambda), state.u);
  state.xi = build_L(state.u, cfg).multiply(state.z);
  state.loglik = gaussian_loglik(data.y, data.a.apply(state.z), state.sigma2());
}

void wellss_iteration(ChainState& state, const Data1D& data, const ModelConfig& model,
                      const SamplerSettings& settings, Rng& rng) {
  const SpdeConfig& cfg = model.spde;
  const Index n = cfg.n;
  if (settings.update_sigma2) rw_sigma2_conditional(state, data, model, rng);

  auto loglik_at = [&](const Vector& u) {
    return gaussian_loglik(data.y, data.a.apply(latent_given_xi(u, state.xi, cfg)),
                           state.sigma2());
  };

  if (settings.update_u && !pinned(model)) {
    const HyperpriorSpec spec = model.prior_at(state.log_lambda);
    auto ll = [&](const Vector& zeta) { return loglik_at(unwhiten(spec, zeta)); };
    const SliceResult res = ess_slice_step(ll, state.zeta, loglik_at(state.u), rng);
    state.slice_shrinks += res.shrinks;
    state.zeta = res.v;
    state.u = unwhiten(spec, state.zeta);
    state.z = latent_given_xi(state.u, state.xi, cfg);
  }

  if (settings.update_lambda) {
    auto lp = [&](double x) {
      return loglik_at(field_from_state(model, state.zeta, x)) + model.log_lambda.logpdf(x);
    };
    const double current = loglik_at(state.u) + model.log_lambda.logpdf(state.log_lambda);
    const RwResult r =
        adaptive_rw_step(lp, state.log_lambda, current, state.adapt.lambda, rng);
    if (r.accepted) {
      state.log_lambda = r.x;
      state.u = field_from_state(model, state.zeta, r.x);
      state.z = latent_given_xi(state.u, state.xi, cfg);
    }
  }

  state.z = sample_latent(state.u, state.sigma2(), data.a, data.y,
                          standard_normal_vector(rng, n), cfg);
  state.xi = build_L(state.u, cfg).multiply(state.z);
  state.loglik = gaussian_loglik(data.y, data.a.apply(state.z), state.sigma2());
}

void mellss_iteration(ChainState& state, const Data1D& data, const ModelConfig& model,
                      const MarginalLikelihood& marginal,
                      const SamplerSettings& settings, Rng& rng) {
  (void)data;
  if (settings.update_sigma2) {
    auto lp = [&](double x) {
      return marginal(state.u, std::exp(x)) + model.log_sigma2.logpdf(x);
    };
    const RwResult r = adaptive_rw_step(
        lp, state.log_sigma2, state.loglik + model.log_sigma2.logpdf(state.log_sigma2),
        state.adapt.sigma2, rng);
    if (r.accepted) {
      state.log_sigma2 = r.x;
      state.loglik = r.logpost - model.log_sigma2.logpdf(r.x);
    }
  }

  if (settings.update_u && !pinned(model)) {
    const HyperpriorSpec spec = model.prior_at(state.log_lambda);
    const double s2 = state.sigma2();
    auto ll = [&](const Vector& zeta) { return marginal(unwhiten(spec, zeta), s2); };
    const SliceResult res = ess_slice_step(ll, state.zeta, state.loglik, rng);
    state.slice_shrinks += res.shrinks;
    state.zeta = res.v;
    state.loglik = res.loglik;
    state.u = unwhiten(spec, state.zeta);
  }

  if (settings.update_lambda) {
    auto lp = [&](double x) {
      return marginal(field_from_state(model, state.zeta, x), state.sigma2()) +
             model.log_lambda.logpdf(x);
    };
    const RwResult r = adaptive_rw_step(
        lp, state.log_lambda, state.loglik + model.log_lambda.logpdf(state.log_lambda),
        state.adapt.lambda, rng);
    if (r.accepted) {
      state.log_lambda = r.x;
      state.loglik = r.logpost - model.log_lambda.logpdf(r.x);
      state.u = field_from_state(model, state.zeta, r.x);
    }
  }
}

Trace run_chain(SamplerKind kind, const Data1D& data_in, const ModelConfig& model,
                const SamplerSettings& settings, std::uint64_t seed) {
  model.validate();
  settings.validate();
  const Index n = model.spde.n;
  const Data1D empty{ObservationOperator(n), Vector(0)};
  const Data1D& data = settings.use_likelihood ? data_in : empty;
  check_data(data, model);

  Rng rng(seed);
  ChainState state = initial_state(kind, data, model, settings);
  std::optional<MarginalLikelihood> marginal;
  if (kind == SamplerKind::kMellss) marginal.emplace(data.a, data.y, model.spde);

  Trace trace;
  trace.kind = kind;
  trace.iterations = settings.iterations;
  trace.burnin = settings.burnin();
  trace.thin = settings.thin;
  const Index kept = settings.kept();
  trace.z.resize(settings.record_z ? kept : 0, n);
  trace.u.resize(settings.record_u ? kept : 0, n);
  trace.lambda.reserve(static_cast<std::size_t>(kept));
  trace.sigma2.reserve(static_cast<std::size_t>(kept));

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto seconds_since_start = [&] {
    return std::chrono::duration<double>(Clock::now() - start).count();
  };
  if (trace.burnin == 0) state.adapt.freeze();

  for (Index t = 1; t <= settings.iterations; ++t) {
    switch (kind) {
      case SamplerKind::kMwg:
        mwg_iteration(state, data, model, settings, rng);
        break;
      case SamplerKind::kWellss:
        wellss_iteration(state, data, model, settings, rng);
        break;
      case SamplerKind::kMellss:
        mellss_iteration(state, data, model, *marginal, settings, rng);
        break;
    }
    if (t == trace.burnin) {
      state.adapt.freeze();
      trace.burn_seconds = seconds_since_start();
    }
    if (t > trace.burnin && (t - trace.burnin) % settings.thin == 0) {
      const Index row = trace.samples();
      if (kind == SamplerKind::kMellss && settings.record_z) {
        state.z = sample_latent(state.u, state.sigma2(), data.a, data.y,
                                standard_normal_vector(rng, n), model.spde);
      }
      if (settings.record_z) trace.z.row(row) = state.z.transpose();
      if (settings.record_u) trace.u.row(row) = state.u.transpose();
      trace.lambda.push_back(state.lambda());
      trace.sigma2.push_back(state.sigma2());
      trace.iteration_index.push_back(t);
      trace.elapsed_seconds.push_back(seconds_since_start());
    }
  }
  trace.kept_seconds = seconds_since_start() - trace.burn_seconds;
  trace.accept_sigma2 = state.adapt.sigma2.acceptance_rate();
  trace.accept_lambda = state.adapt.lambda.acceptance_rate();
  if (!state.adapt.sites.empty()) {
    std::int64_t tries = 0;
    std::int64_t accepts = 0;
    for (const auto& s : state.adapt.sites) {
      tries += s.tries;
      accepts += s.accepts;
    }
    trace.accept_sites = tries == 0 ? 0.0 : static_cast<double>(accepts) / static_cast<double>(tries);
  }
  trace.final_scale_sigma2 = state.adapt.sigma2.scale;
  trace.final_scale_lambda = state.adapt.lambda.scale;
  return trace;
}

}  // namespace nsgp
