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

#include "nsgp/nsgp.h"

#include "nsgp/error.hpp"
#include "nsgp/pipeline.hpp"

#include <algorithm>
#include <new>
#include <string>

struct nsgp_config {
  nsgp::RunConfig cfg;
};

struct nsgp_result {
  std::vector<double> mean;
  std::vector<double> lo;
  std::vector<double> hi;
  std::string report;
};

namespace {

thread_local std::string last_error;

template <class F>
int guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return NSGP_OK;
  } catch (const nsgp::Error& e) {
    last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return NSGP_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return NSGP_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return NSGP_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) nsgp::fail(nsgp::ErrorCode::kInvalidArgument, what);
}

}  // namespace

extern "C" {

const char* nsgp_version(void) { return "0.1.0"; }

const char* nsgp_status_name(int status) {
  return nsgp::error_code_name(static_cast<nsgp::ErrorCode>(status));
}

const char* nsgp_last_error(void) { return last_error.c_str(); }

int nsgp_config_create(nsgp_config** out) {
  return guarded([&] {
    require(out != nullptr, "null output pointer");
    *out = new nsgp_config{};
  });
}

void nsgp_config_destroy(nsgp_config* cfg) { delete cfg; }

int nsgp_config_set(nsgp_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg != nullptr && key != nullptr && value != nullptr, "null argument");
    cfg->cfg.set(key, value);
  });
}

int nsgp_config_load(nsgp_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg != nullptr && path != nullptr, "null argument");
    cfg->cfg.load_file(path);
  });
}

int nsgp_simulate(const nsgp_config* cfg) {
  return guarded([&] {
    require(cfg != nullptr, "null config");
    nsgp::cmd_simulate(cfg->cfg);
  });
}

int nsgp_fit(const nsgp_config* cfg) {
  return guarded([&] {
    require(cfg != nullptr, "null config");
    nsgp::cmd_fit(cfg->cfg);
  });
}

int nsgp_fit2d(const nsgp_config* cfg) {
  return guarded([&] {
    require(cfg != nullptr, "null config");
    nsgp::cmd_fit2d(cfg->cfg);
  });
}

int nsgp_diagnose(const nsgp_config* cfg) {
  return guarded([&] {
    require(cfg != nullptr, "null config");
    nsgp::cmd_diagnose(cfg->cfg);
  });
}

int nsgp_fit_1d(const nsgp_config* cfg, const double* x, const double* y, size_t m,
                nsgp_result** out) {
  return guarded([&] {
    require(cfg != nullptr && x != nullptr && y != nullptr && out != nullptr, "null argument");
    const auto n = static_cast<nsgp::Index>(m);
    const nsgp::FitResult1D r = nsgp::fit_1d(cfg->cfg, Eigen::Map<const nsgp::Vector>(x, n),
                                             Eigen::Map<const nsgp::Vector>(y, n), cfg->cfg.seed);
    auto* res = new nsgp_result{r.report.posterior_mean, r.report.band_lo, r.report.band_hi,
                                r.report.to_json()};
    *out = res;
  });
}

size_t nsgp_result_size(const nsgp_result* result) {
  return result == nullptr ? 0 : result->mean.size();
}

int nsgp_result_posterior(const nsgp_result* result, double* mean, double* lo, double* hi) {
  return guarded([&] {
    require(result != nullptr, "null result");
    if (mean != nullptr) std::copy(result->mean.begin(), result->mean.end(), mean);
    if (lo != nullptr) std::copy(result->lo.begin(), result->lo.end(), lo);
    if (hi != nullptr) std::copy(result->hi.begin(), result->hi.end(), hi);
  });
}

const char* nsgp_result_report(const nsgp_result* result) {
  return result == nullptr ? "" : result->report.c_str();
}

void nsgp_result_destroy(nsgp_result* result) { delete result; }

}  // extern "C"
