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

#ifndef NSGP_PIPELINE_HPP
#define NSGP_PIPELINE_HPP

#include "nsgp/additive.hpp"
#include "nsgp/diagnostics.hpp"
#include "nsgp/samplers.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace nsgp {

/// Settings shared by every command. Unset numeric fields hold NaN or -1 and
/// fall back to data-driven defaults.
struct RunConfig {
  std::string experiment = "exp1";
  std::string data;
  std::string truth;
  std::string out = ".";
  std::string run;  // fit directory read by diagnose
  std::string hyperprior = "ar1";
  std::string sampler = "mellss";

  long long n = -1;  // total 1-D grid size
  long long ext = -1;
  long long ext1 = -1;
  long long ext2 = -1;
  long long n1 = -1;
  long long n2 = -1;
  long long m = -1;
  double noise_variance = std::numeric_limits<double>::quiet_NaN();
  double snr = 5.0;

  long long iterations = 1000;
  double burnin = 0.2;
  long long thin = 1;
  double initial_scale = 0.5;
  double site_scale = 0.1;
  double log_lambda_mean = 0.0;
  double log_lambda_var = 3.0;
  double log_sigma2_mean = 0.0;
  double log_sigma2_var = 10.0;
  double mu_ell = std::numeric_limits<double>::quiet_NaN();
  double tau_ell = std::numeric_limits<double>::quiet_NaN();
  bool elicit = false;
  bool interaction = false;
  std::uint64_t seed = 1;
  long long chains = 1;
  bool timing = false;

  /// Sets one field from its text form; throws kConfigError on an unknown
  /// key and kParseError on a malformed value.
  void set(const std::string& key, const std::string& value);
  /// Reads flat `key = value` lines; `#` starts a comment.
  void load_file(const std::string& path);
  /// Flat text form of every field, one `key = value` per line.
  std::string to_text() const;
  void validate() const;
};

/// Column-oriented CSV table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  Index rows() const { return columns.empty() ? 0 : static_cast<Index>(columns.front().size()); }
  const std::vector<double>& column(const std::string& name) const;
  bool has(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Files written by a command; removed again unless `commit` is called.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);
  ~OutputSet();
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  const std::filesystem::path& dir() const { return dir_; }
  void write(const std::string& name, const std::string& content);
  void write_matrix(const std::string& name, const std::vector<std::string>& header,
                    const Matrix& values);
  void make_subdir(const std::filesystem::path& sub);
  void commit() { committed_ = true; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
  std::vector<std::filesystem::path> dirs_;
  bool committed_ = false;
};

/// 1-D fit products in the original response units.
struct FitResult1D {
  Trace trace;
  Grid1D grid;
  Standardized standardization;
  Vector x;
  Matrix fitted;  // kept samples x observations
  FitReport report;
};

struct FitResult2D {
  Trace2D trace;
  AdditiveData data;
  Standardized standardization;
  Matrix fitted;  // may be empty when too large to store
  Vector fitted_mean;
  CredibleBand band;
  FitReport report;
};

Dataset simulate_dataset(const RunConfig& cfg);
FitResult1D fit_1d(const RunConfig& cfg, const Vector& x, const Vector& y,
                   std::uint64_t seed);
FitResult2D fit_2d(const RunConfig& cfg, const Vector& x1, const Vector& x2,
                   const Vector& y, const std::vector<std::uint8_t>& missing,
                   std::uint64_t seed);

/// Command entry points; each writes its files under cfg.out.
void cmd_simulate(const RunConfig& cfg);
void cmd_fit(const RunConfig& cfg);
void cmd_fit2d(const RunConfig& cfg);
void cmd_diagnose(const RunConfig& cfg);

}  // namespace nsgp

#endif  // NSGP_PIPELINE_HPP
