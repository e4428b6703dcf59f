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

#ifndef NSGP_NSGP_H
#define NSGP_NSGP_H

#include <stddef.h>

#if defined(_WIN32)
#define NSGP_API __declspec(dllexport)
#else
#define NSGP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by every fallible call. */
typedef enum nsgp_status {
  NSGP_OK = 0,
  NSGP_NOT_POSITIVE_DEFINITE = 1,
  NSGP_BANDWIDTH_MISMATCH = 2,
  NSGP_SINGULAR = 3,
  NSGP_DIMENSION_MISMATCH = 4,
  NSGP_OUT_OF_BAND = 5,
  NSGP_MULTI_SITE_DIFF = 6,
  NSGP_WRONG_KIND = 7,
  NSGP_KIND_MISMATCH = 8,
  NSGP_INVALID_RANGE = 9,
  NSGP_NON_FINITE_LOG_POST = 10,
  NSGP_CONFIG_ERROR = 11,
  NSGP_OUT_OF_HULL = 12,
  NSGP_DEGENERATE_CHAIN = 13,
  NSGP_IO_ERROR = 14,
  NSGP_PARSE_ERROR = 15,
  NSGP_INVALID_ARGUMENT = 16,
  NSGP_INTERNAL = 99
} nsgp_status;

typedef struct nsgp_config nsgp_config;
typedef struct nsgp_result nsgp_result;

NSGP_API const char* nsgp_version(void);
/* Symbolic name of a status code, e.g. "ConfigError". */
NSGP_API const char* nsgp_status_name(int status);
/* Message of the last failure on the calling thread; "" after success. */
NSGP_API const char* nsgp_last_error(void);

NSGP_API int nsgp_config_create(nsgp_config** out);
NSGP_API void nsgp_config_destroy(nsgp_config* cfg);
/* Keys match the flat config-file keys (iterations, sampler, seed, ...). */
NSGP_API int nsgp_config_set(nsgp_config* cfg, const char* key, const char* value);
NSGP_API int nsgp_config_load(nsgp_config* cfg, const char* path);

/* Command runners; outputs go to the configured `out` directory. */
NSGP_API int nsgp_simulate(const nsgp_config* cfg);
NSGP_API int nsgp_fit(const nsgp_config* cfg);
NSGP_API int nsgp_fit2d(const nsgp_config* cfg);
NSGP_API int nsgp_diagnose(const nsgp_config* cfg);

/* In-memory 1-D fit of m observations; no files are written. */
NSGP_API int nsgp_fit_1d(const nsgp_config* cfg, const double* x, const double* y, size_t m,
                         nsgp_result** out);
NSGP_API size_t nsgp_result_size(const nsgp_result* result);
/* Each non-null array receives nsgp_result_size(result) values. */
NSGP_API int nsgp_result_posterior(const nsgp_result* result, double* mean, double* lo,
                                   double* hi);
/* Report as JSON text, owned by the result. */
NSGP_API const char* nsgp_result_report(const nsgp_result* result);
NSGP_API void nsgp_result_destroy(nsgp_result* result);

#ifdef __cplusplus
}
#endif

#endif /* NSGP_NSGP_H */
