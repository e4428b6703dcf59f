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

#include "nsgp/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

namespace nsgp {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    fail(ErrorCode::kParseError, "'" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    fail(ErrorCode::kParseError, "'" + key + "' expects an integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  fail(ErrorCode::kParseError, "'" + key + "' expects a boolean, got '" + text + "'");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string join_row(const double* v, Index n) {
  std::string s;
  for (Index i = 0; i < n; ++i) {
    if (i > 0) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

std::vector<std::string> numbered(const std::string& prefix, Index n) {
  std::vector<std::string> h;
  for (Index i = 0; i < n; ++i) h.push_back(prefix + std::to_string(i));
  return h;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : to_vector(v).mean();
}

/// ESS of one column, or NaN when the chain is too short or constant.
double safe_ess(const Vector& chain) {
  if (chain.size() < 10) return std::numeric_limits<double>::quiet_NaN();
  try {
    return ess(chain);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDegenerateChain) return std::numeric_limits<double>::quiet_NaN();
    throw;
  }
}

double min_column_ess(const Matrix& m, const std::vector<Index>& cols) {
  double lowest = std::numeric_limits<double>::quiet_NaN();
  for (Index c : cols) {
    const double e = safe_ess(m.col(c));
    if (std::isfinite(e) && !(e >= lowest)) lowest = e;
  }
  return lowest;
}

std::vector<Index> all_columns(Index n) {
  std::vector<Index> c(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = i;
  return c;
}

struct ScalarTrace {
  std::string name;
  std::vector<double> values;
};

/// Report pieces shared by fit and diagnose.
FitReport summarize(const std::vector<ScalarTrace>& scalars, const Matrix& log_ell,
                    const std::vector<Index>& interior, const Matrix& fitted,
                    const CredibleBand* band_override, const Vector* mean_override) {
  FitReport r;
  for (const auto& s : scalars) {
    if (s.name == "iteration") continue;
    const double e = safe_ess(to_vector(s.values));
    if (std::isfinite(e)) r.ess[s.name] = e;
    if (s.name == "lambda" || s.name == "lambda1") r.lambda_mean = mean_of(s.values);
    if (s.name == "sigma2") r.sigma2_mean = mean_of(s.values);
  }
  if (log_ell.rows() > 0 && !interior.empty()) {
    const double e = min_column_ess(log_ell, interior);
    if (std::isfinite(e)) r.ess["u_min"] = e;
  }
  if (fitted.rows() > 0) {
    const double e = min_column_ess(fitted, all_columns(fitted.cols()));
    if (std::isfinite(e)) r.ess["fitted_min"] = e;
  }
  if (mean_override != nullptr) {
    r.posterior_mean = to_std(*mean_override);
    r.band_lo = to_std(band_override->lo);
    r.band_hi = to_std(band_override->hi);
  } else if (fitted.rows() > 0) {
    const CredibleBand b = credible_band(fitted);
    r.posterior_mean = to_std(fitted.colwise().mean().transpose());
    r.band_lo = to_std(b.lo);
    r.band_hi = to_std(b.hi);
  }
  return r;
}

void add_truth(FitReport& r, const Vector& truth) {
  const Vector mean = to_vector(r.posterior_mean);
  if (truth.size() != mean.size()) {
    fail(ErrorCode::kDimensionMismatch, "truth does not match the fitted locations");
  }
  r.mae = mae(mean, truth);
  r.ec = ec(CredibleBand{to_vector(r.band_lo), to_vector(r.band_hi)}, truth);
}

void add_timing(FitReport& r, double burn_seconds, double kept_seconds) {
  r.burn_minutes = burn_seconds / 60.0;
  r.kept_minutes = kept_seconds / 60.0;
  r.cpu_minutes = (burn_seconds + kept_seconds) / 60.0;
  if (!r.ess.empty() && *r.cpu_minutes > 0.0) {
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& [k, v] : r.ess) lowest = std::min(lowest, v);
    r.oes = oes(lowest, *r.cpu_minutes);
  }
}

Index default_extension(double mu_ell, double h) {
  return static_cast<Index>(std::ceil(4.0 * std::exp(mu_ell) / h - 1e-9));
}

std::pair<double, double> prior_location(const RunConfig& cfg, double min_gap, double span) {
  double mu = 0.0;
  double tau = 1.0;
  if (cfg.elicit) {
    const ElicitedPrior e = elicit_prior(min_gap, span);
    mu = e.mu_ell;
    tau = e.tau_ell;
  }
  if (std::isfinite(cfg.mu_ell)) mu = cfg.mu_ell;
  if (std::isfinite(cfg.tau_ell)) tau = cfg.tau_ell;
  return {mu, tau};
}

SamplerSettings settings_from(const RunConfig& cfg) {
  SamplerSettings s;
  s.iterations = cfg.iterations;
  s.burnin_fraction = cfg.burnin;
  s.thin = cfg.thin;
  s.initial_scale = cfg.initial_scale;
  s.site_scale = cfg.site_scale;
  return s;
}

Grid1D grid_for(const RunConfig& cfg, const Vector& x, double mu_ell) {
  const auto [gap, span] = covariate_distance_range(x);
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  Index interior = 0;
  Index ext = 0;
  if (cfg.n > 0) {
    ext = cfg.ext >= 0 ? cfg.ext : default_extension(mu_ell, span / static_cast<double>(cfg.n - 1));
    interior = cfg.n - 2 * ext;
    if (interior < 2) fail(ErrorCode::kConfigError, "grid size leaves fewer than two interior nodes");
  } else {
    interior = static_cast<Index>(std::llround(span / gap)) + 1;
    if (interior > 100000) {
      fail(ErrorCode::kConfigError, "data spacing implies a very large grid; set n explicitly");
    }
    const double h = span / static_cast<double>(interior - 1);
    ext = cfg.ext >= 0 ? cfg.ext : default_extension(mu_ell, h);
  }
  return make_grid(lo, hi, interior, ext);
}

Vector observed_values(const Vector& y, const std::vector<std::uint8_t>& missing) {
  std::vector<double> v;
  for (Index i = 0; i < y.size(); ++i) {
    if (missing.empty() || missing[static_cast<std::size_t>(i)] == 0) v.push_back(y[i]);
  }
  return to_vector(v);
}

std::vector<std::uint8_t> flags_from(const std::vector<double>& col) {
  std::vector<std::uint8_t> f;
  for (double v : col) {
    if (v != 0.0 && v != 1.0) fail(ErrorCode::kParseError, "missing flags must be 0 or 1");
    f.push_back(v == 1.0 ? 1 : 0);
  }
  return f;
}

bool is_two_dimensional(const std::string& experiment) {
  return experiment == "exp4" || experiment == "additive2d";
}

void write_report(OutputSet& out, const FitReport& r) { out.write("report.json", r.to_json()); }

CsvTable read_optional_truth(const RunConfig& cfg, bool* present) {
  *present = !cfg.truth.empty();
  return *present ? read_csv(cfg.truth) : CsvTable{};
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration

namespace {

using Field = std::variant<std::string RunConfig::*, long long RunConfig::*, double RunConfig::*,
                           bool RunConfig::*, std::uint64_t RunConfig::*>;

const std::vector<std::pair<std::string, Field>>& config_fields() {
  static const std::vector<std::pair<std::string, Field>> fields = {
      {"experiment", &RunConfig::experiment},
      {"data", &RunConfig::data},
      {"truth", &RunConfig::truth},
      {"out", &RunConfig::out},
      {"run", &RunConfig::run},
      {"hyperprior", &RunConfig::hyperprior},
      {"sampler", &RunConfig::sampler},
      {"n", &RunConfig::n},
      {"ext", &RunConfig::ext},
      {"ext1", &RunConfig::ext1},
      {"ext2", &RunConfig::ext2},
      {"n1", &RunConfig::n1},
      {"n2", &RunConfig::n2},
      {"m", &RunConfig::m},
      {"noise_variance", &RunConfig::noise_variance},
      {"snr", &RunConfig::snr},
      {"iterations", &RunConfig::iterations},
      {"burnin", &RunConfig::burnin},
      {"thin", &RunConfig::thin},
      {"initial_scale", &RunConfig::initial_scale},
      {"site_scale", &RunConfig::site_scale},
      {"log_lambda_mean", &RunConfig::log_lambda_mean},
      {"log_lambda_var", &RunConfig::log_lambda_var},
      {"log_sigma2_mean", &RunConfig::log_sigma2_mean},
      {"log_sigma2_var", &RunConfig::log_sigma2_var},
      {"mu_ell", &RunConfig::mu_ell},
      {"tau_ell", &RunConfig::tau_ell},
      {"elicit", &RunConfig::elicit},
      {"interaction", &RunConfig::interaction},
      {"seed", &RunConfig::seed},
      {"chains", &RunConfig::chains},
      {"timing", &RunConfig::timing},
  };
  return fields;
}

template <class... F>
struct Overloaded : F... {
  using F::operator()...;
};
template <class... F>
Overloaded(F...) -> Overloaded<F...>;

}  // namespace

void RunConfig::set(const std::string& key_in, const std::string& value) {
  const std::string key = trim(key_in);
  const auto& fields = config_fields();
  const auto it = std::find_if(fields.begin(), fields.end(),
                               [&](const auto& f) { return f.first == key; });
  if (it == fields.end()) fail(ErrorCode::kConfigError, "unknown setting '" + key + "'");
  std::visit(Overloaded{
                 [&](std::string RunConfig::*m) { this->*m = trim(value); },
                 [&](long long RunConfig::*m) { this->*m = parse_int(key, value); },
                 [&](double RunConfig::*m) { this->*m = parse_double(key, value); },
                 [&](bool RunConfig::*m) { this->*m = parse_bool(key, value); },
                 [&](std::uint64_t RunConfig::*m) {
                   const long long v = parse_int(key, value);
                   if (v < 0) fail(ErrorCode::kParseError, "'" + key + "' must be non-negative");
                   this->*m = static_cast<std::uint64_t>(v);
                 },
             },
             it->second);
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open config file '" + path + "'");
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kParseError, path + ":" + std::to_string(number) + ": expected key = value");
    }
    set(line.substr(0, eq), line.substr(eq + 1));
  }
}

std::string RunConfig::to_text() const {
  std::string o;
  for (const auto& [key, field] : config_fields()) {
    if (key == "out" || key == "run" || key == "chains") continue;
    std::string v;
    const bool keep = std::visit(
        Overloaded{
            [&](std::string RunConfig::*m) { v = this->*m; return true; },
            [&](long long RunConfig::*m) { v = std::to_string(this->*m); return true; },
            [&](double RunConfig::*m) { v = format_double(this->*m); return !std::isnan(this->*m); },
            [&](bool RunConfig::*m) { v = this->*m ? "true" : "false"; return true; },
            [&](std::uint64_t RunConfig::*m) { v = std::to_string(this->*m); return true; },
        },
        field);
    if (keep) o += key + " = " + v + "\n";
  }
  return o;
}

void RunConfig::validate() const {
  parse_hyperprior(hyperprior);
  parse_sampler(sampler);
  if (iterations < 1) fail(ErrorCode::kConfigError, "iterations must be positive");
  if (thin < 1) fail(ErrorCode::kConfigError, "thin must be at least 1");
  if (!(burnin >= 0.0 && burnin < 1.0)) fail(ErrorCode::kConfigError, "burnin must lie in [0, 1)");
  if (chains < 1) fail(ErrorCode::kConfigError, "chains must be at least 1");
  if (!(log_lambda_var > 0.0) || !(log_sigma2_var > 0.0)) {
    fail(ErrorCode::kConfigError, "prior variances must be positive");
  }
  if (!(initial_scale > 0.0) || !(site_scale > 0.0)) {
    fail(ErrorCode::kConfigError, "proposal scales must be positive");
  }
  if (std::isfinite(tau_ell) && !(tau_ell > 0.0)) fail(ErrorCode::kConfigError, "tau_ell must be positive");
  if (!std::isnan(noise_variance) && !(noise_variance >= 0.0 && std::isfinite(noise_variance))) {
    fail(ErrorCode::kConfigError, "noise_variance must be non-negative");
  }
  if (!(snr > 0.0)) fail(ErrorCode::kConfigError, "snr must be positive");
  if (n == 0 || n1 == 0 || n2 == 0 || m == 0) fail(ErrorCode::kConfigError, "sizes must be positive");
}

// ---------------------------------------------------------------------------
// CSV and files

const std::vector<double>& CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return columns[i];
  }
  fail(ErrorCode::kParseError, "CSV lacks a '" + name + "' column");
}

bool CsvTable::has(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kParseError, path + ": empty file");
  t.header = split(trim(line));
  for (const auto& h : t.header) {
    if (h.empty()) fail(ErrorCode::kParseError, path + ": empty column name");
  }
  t.columns.assign(t.header.size(), {});
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      fail(ErrorCode::kParseError, path + ":" + std::to_string(number) + ": expected " +
                                       std::to_string(t.header.size()) + " fields");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      const auto& s = cells[c];
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        fail(ErrorCode::kParseError, path + ":" + std::to_string(number) + ": bad number '" + s + "'");
      }
      t.columns[c].push_back(v);
    }
  }
  return t;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) fail(ErrorCode::kInternal, "number formatting failed");
  return {buf, ptr};
}

OutputSet::OutputSet(fs::path dir) : dir_(std::move(dir)) { make_subdir(""); }

void OutputSet::make_subdir(const fs::path& sub) {
  const fs::path target = sub.empty() ? dir_ : dir_ / sub;
  std::vector<fs::path> missing;
  for (fs::path p = target; !p.empty() && !fs::exists(p); p = p.parent_path()) {
    missing.push_back(p);
    if (p == p.parent_path()) break;
  }
  std::error_code ec;
  fs::create_directories(target, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create directory '" + target.string() + "'");
  dirs_.insert(dirs_.end(), missing.rbegin(), missing.rend());
}

OutputSet::~OutputSet() {
  if (committed_) return;
  std::error_code ec;
  for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
  for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) {
    if (fs::is_directory(*it, ec) && fs::is_empty(*it, ec)) fs::remove(*it, ec);
  }
}

void OutputSet::write(const std::string& name, const std::string& content) {
  const fs::path p = dir_ / name;
  files_.push_back(p);
  std::ofstream o(p, std::ios::binary | std::ios::trunc);
  o << content;
  o.close();
  if (!o) fail(ErrorCode::kIoError, "cannot write '" + p.string() + "'");
}

void OutputSet::write_matrix(const std::string& name, const std::vector<std::string>& header,
                             const Matrix& values) {
  if (static_cast<Index>(header.size()) != values.cols()) {
    fail(ErrorCode::kInternal, "header width does not match the table");
  }
  std::string s;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) s += ',';
    s += header[i];
  }
  s += '\n';
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = values;
  for (Index r = 0; r < rm.rows(); ++r) {
    s += join_row(rm.row(r).data(), rm.cols());
    s += '\n';
  }
  write(name, s);
}

// ---------------------------------------------------------------------------
// simulation and fitting

Dataset simulate_dataset(const RunConfig& cfg) {
  const std::string& e = cfg.experiment;
  auto noise = [&](double d) { return std::isnan(cfg.noise_variance) ? d : cfg.noise_variance; };
  if (e == "exp1") return gen_experiment1(cfg.m > 0 ? cfg.m : 81, noise(0.01), cfg.seed);
  if (e == "exp2" || e == "damped_sine") {
    return gen_damped_sine(cfg.m > 0 ? cfg.m : 350, noise(0.04), cfg.seed);
  }
  if (e == "exp3" || e == "bumps") return gen_bumps(cfg.m > 0 ? cfg.m : 512, cfg.snr, cfg.seed);
  if (is_two_dimensional(e)) {
    return gen_additive_2d(cfg.n1 > 0 ? cfg.n1 : 143, cfg.n2 > 0 ? cfg.n2 : 143, noise(0.06),
                           cfg.seed);
  }
  fail(ErrorCode::kConfigError, "unknown experiment '" + e + "'");
}

FitResult1D fit_1d(const RunConfig& cfg, const Vector& x, const Vector& y,
                   std::uint64_t seed) {
  cfg.validate();
  if (x.size() != y.size() || x.size() < 3) {
    fail(ErrorCode::kDimensionMismatch, "need matching x and y with at least three rows");
  }
  const auto [gap, span] = covariate_distance_range(x);
  const auto [mu, tau] = prior_location(cfg, gap, span);
  FitResult1D r;
  r.x = x;
  r.grid = grid_for(cfg, x, mu);
  r.standardization = standardize(y);
  const Data1D data{build_observation_operator(x, r.grid), r.standardization.y};

  ModelConfig model;
  model.spde = SpdeConfig{r.grid.n, r.grid.h, r.grid.n_ext, 1.0, 1.5};
  model.prior.kind = parse_hyperprior(cfg.hyperprior);
  model.prior.mu_ell = mu;
  model.prior.tau_ell = tau;
  model.log_lambda = GaussianPrior{cfg.log_lambda_mean, cfg.log_lambda_var};
  model.log_sigma2 = GaussianPrior{cfg.log_sigma2_mean, cfg.log_sigma2_var};
  const SamplerKind kind = parse_sampler(cfg.sampler);
  r.trace = run_chain(kind, data, model, settings_from(cfg), seed);

  const double scale = r.standardization.scale;
  const double shift = r.standardization.mean;
  const Index kept = r.trace.samples();
  r.fitted.resize(kept, x.size());
  for (Index i = 0; i < kept; ++i) {
    r.fitted.row(i) =
        (data.a.apply(r.trace.z.row(i).transpose()).array() * scale + shift).matrix().transpose();
  }
  std::vector<double> s2 = r.trace.sigma2;
  for (double& v : s2) v *= scale * scale;

  std::vector<Index> interior;
  for (Index i = r.grid.interior_begin(); i < r.grid.interior_begin() + r.grid.interior_size(); ++i) {
    interior.push_back(i);
  }
  r.report = summarize({{"lambda", r.trace.lambda}, {"sigma2", s2}}, r.trace.u, interior, r.fitted,
                       nullptr, nullptr);
  r.report.model = "1d";
  r.report.sampler = cfg.sampler;
  r.report.hyperprior = cfg.hyperprior;
  r.report.iterations = r.trace.iterations;
  r.report.burnin = r.trace.burnin;
  r.report.thin = r.trace.thin;
  r.report.kept = kept;
  r.report.acceptance["sigma2"] = r.trace.accept_sigma2;
  r.report.acceptance["lambda"] = r.trace.accept_lambda;
  if (kind == SamplerKind::kMwg) r.report.acceptance["sites"] = r.trace.accept_sites;
  if (kept > 0) {
    Matrix ell(kept, static_cast<Index>(interior.size()));
    for (std::size_t k = 0; k < interior.size(); ++k) {
      ell.col(static_cast<Index>(k)) = r.trace.u.col(interior[k]).array().exp().matrix();
      r.report.grid_x.push_back(r.grid.node(interior[k]));
    }
    const CredibleBand b = credible_band(ell);
    r.report.ell_mean = to_std(ell.colwise().mean().transpose());
    r.report.ell_lo = to_std(b.lo);
    r.report.ell_hi = to_std(b.hi);
  }
  return r;
}

FitResult2D fit_2d(const RunConfig& cfg, const Vector& x1, const Vector& x2,
                   const Vector& y, const std::vector<std::uint8_t>& missing,
                   std::uint64_t seed) {
  cfg.validate();
  const Grid2D probe = build_grid_2d(x1, x2, missing, 0, 0);
  const auto [gap1, span1] = covariate_distance_range(x1);
  const auto [gap2, span2] = covariate_distance_range(x2);
  const auto [mu, tau] = prior_location(cfg, std::min(gap1, gap2), std::max(span1, span2));
  const Index e1 = cfg.ext1 >= 0 ? cfg.ext1 : cfg.ext >= 0 ? cfg.ext : default_extension(mu, probe.axis1.h);
  const Index e2 = cfg.ext2 >= 0 ? cfg.ext2 : cfg.ext >= 0 ? cfg.ext : default_extension(mu, probe.axis2.h);
  const Grid2D grid = build_grid_2d(x1, x2, missing, e1, e2);

  FitResult2D r;
  r.standardization = standardize(observed_values(y, missing));
  const Vector ystd = (y.array() - r.standardization.mean) / r.standardization.scale;
  r.data = make_additive_data(grid, ystd, cfg.interaction);

  Model2D model;
  model.spde1 = SpdeConfig{grid.n1(), grid.axis1.h, e1, 1.0, 1.5};
  model.spde2 = SpdeConfig{grid.n2(), grid.axis2.h, e2, 1.0, 1.5};
  model.prior.kind = parse_hyperprior(cfg.hyperprior);
  model.prior.mu_ell = mu;
  model.prior.tau_ell = tau;
  model.log_lambda = GaussianPrior{cfg.log_lambda_mean, cfg.log_lambda_var};
  model.log_sigma2 = GaussianPrior{cfg.log_sigma2_mean, cfg.log_sigma2_var};
  model.interaction = cfg.interaction;
  r.trace = run_chain_2d(r.data, model, settings_from(cfg), seed);

  const double scale = r.standardization.scale;
  const double shift = r.standardization.mean;
  if (r.trace.fitted.rows() > 0) r.fitted = (r.trace.fitted.array() * scale + shift).matrix();
  if (r.trace.samples() > 0) {
    r.fitted_mean = (r.trace.fitted_summary.mean.array() * scale + shift).matrix();
    if (r.fitted.rows() > 0) {
      r.band = credible_band(r.fitted);
    } else {
      const Vector sd = r.trace.fitted_summary.sd() * scale;
      r.band = {r.fitted_mean - 1.959963984540054 * sd, r.fitted_mean + 1.959963984540054 * sd};
    }
  }
  std::vector<double> s2 = r.trace.sigma2;
  for (double& v : s2) v *= scale * scale;
  std::vector<ScalarTrace> scalars = {{"lambda1", r.trace.lambda[0]}, {"lambda2", r.trace.lambda[1]}};
  if (cfg.interaction) {
    scalars.push_back({"lambda3", r.trace.lambda[2]});
    scalars.push_back({"lambda4", r.trace.lambda[3]});
  }
  scalars.push_back({"sigma2", s2});
  Matrix log_ell(r.trace.u1.rows(), r.trace.u1.cols() + r.trace.u2.cols());
  log_ell << r.trace.u1, r.trace.u2;
  std::vector<Index> interior;
  for (Index i = 0; i < grid.axis1.interior_size(); ++i) interior.push_back(grid.axis1.interior_begin() + i);
  for (Index i = 0; i < grid.axis2.interior_size(); ++i) {
    interior.push_back(grid.n1() + grid.axis2.interior_begin() + i);
  }
  const bool have = r.trace.samples() > 0;
  r.report = summarize(scalars, log_ell, interior, r.fitted, have ? &r.band : nullptr,
                       have ? &r.fitted_mean : nullptr);
  r.report.model = cfg.interaction ? "2d-interaction" : "2d";
  r.report.sampler = "block-mellss";
  r.report.hyperprior = cfg.hyperprior;
  r.report.iterations = r.trace.iterations;
  r.report.burnin = r.trace.burnin;
  r.report.thin = r.trace.thin;
  r.report.kept = r.trace.samples();
  r.report.acceptance["sigma2"] = r.trace.accept_sigma2;
  for (int f = 0; f < (cfg.interaction ? 4 : 2); ++f) {
    r.report.acceptance["lambda" + std::to_string(f + 1)] = r.trace.accept_lambda[static_cast<std::size_t>(f)];
  }
  return r;
}

// ---------------------------------------------------------------------------
// commands

void cmd_simulate(const RunConfig& cfg) {
  cfg.validate();
  const Dataset d = simulate_dataset(cfg);
  OutputSet out(cfg.out);
  std::string data;
  std::string truth;
  if (d.two_dimensional()) {
    data = "x1,x2,y,missing\n";
    truth = "x1,x2,truth\n";
    for (Index i = 0; i < d.y.size(); ++i) {
      const std::string xy = format_double(d.x[i]) + "," + format_double(d.x2[i]);
      data += xy + "," + format_double(d.y[i]) + "," +
              std::to_string(d.missing.empty() ? 0 : d.missing[static_cast<std::size_t>(i)]) + "\n";
      truth += xy + "," + format_double(d.truth[i]) + "\n";
    }
  } else {
    data = "x,y\n";
    truth = "x,truth\n";
    for (Index i = 0; i < d.y.size(); ++i) {
      data += format_double(d.x[i]) + "," + format_double(d.y[i]) + "\n";
      truth += format_double(d.x[i]) + "," + format_double(d.truth[i]) + "\n";
    }
  }
  out.write("data.csv", data);
  out.write("truth.csv", truth);
  out.commit();
}

namespace {

template <class Body>
void for_each_chain(const RunConfig& cfg, OutputSet& out, const Body& body) {
  for (long long k = 0; k < cfg.chains; ++k) {
    RunConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(k);
    std::string sub;
    if (cfg.chains > 1) {
      sub = "chain_" + std::to_string(k + 1) + "/";
      out.make_subdir(sub);
    }
    body(c, sub);
  }
}

Vector truth_for_rows(const CsvTable& truth, const Vector& x, const char* xname) {
  const auto& tx = truth.column(xname);
  const auto& tv = truth.column("truth");
  if (static_cast<Index>(tx.size()) != x.size()) {
    fail(ErrorCode::kDimensionMismatch, "truth rows do not match the data rows");
  }
  for (Index i = 0; i < x.size(); ++i) {
    if (std::abs(tx[static_cast<std::size_t>(i)] - x[i]) > 1e-9 * (1.0 + std::abs(x[i]))) {
      fail(ErrorCode::kDimensionMismatch, "truth locations do not match the data locations");
    }
  }
  return to_vector(tv);
}

}  // namespace

void cmd_fit(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.data.empty()) fail(ErrorCode::kConfigError, "fit needs a data file");
  const CsvTable table = read_csv(cfg.data);
  const Vector x = to_vector(table.column("x"));
  const Vector y = to_vector(table.column("y"));
  bool have_truth = false;
  const CsvTable truth_table = read_optional_truth(cfg, &have_truth);
  const Vector truth = have_truth ? truth_for_rows(truth_table, x, "x") : Vector();

  OutputSet out(cfg.out);
  for_each_chain(cfg, out, [&](const RunConfig& c, const std::string& sub) {
    FitResult1D r = fit_1d(c, x, y, c.seed);
    const Index n = r.grid.n;
    const Matrix z = (r.trace.z.array() * r.standardization.scale + r.standardization.mean).matrix();
    out.write_matrix(sub + "trace_z.csv", numbered("z", n), z);
    out.write_matrix(sub + "trace_ell.csv", numbered("ell", n), r.trace.u.array().exp().matrix());
    Matrix scalars(r.trace.samples(), 3);
    for (Index i = 0; i < r.trace.samples(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      scalars.row(i) << static_cast<double>(r.trace.iteration_index[k]), r.trace.lambda[k],
          r.trace.sigma2[k] * r.standardization.scale * r.standardization.scale;
    }
    out.write_matrix(sub + "trace_scalars.csv", {"iteration", "lambda", "sigma2"}, scalars);
    out.write_matrix(sub + "trace_fitted.csv", numbered("f", x.size()), r.fitted);
    Matrix g(n, 4);
    for (Index i = 0; i < n; ++i) {
      const bool inside = i >= r.grid.interior_begin() && i < r.grid.interior_begin() + r.grid.interior_size();
      g.row(i) << 1.0, static_cast<double>(i), r.grid.node(i), inside ? 1.0 : 0.0;
    }
    out.write_matrix(sub + "grid.csv", {"axis", "index", "x", "interior"}, g);
    if (have_truth) {
      add_truth(r.report, truth);
      // Grid coverage is reported when every interior node has a truth value.
      std::vector<Index> cols;
      std::vector<double> tv;
      for (Index i = r.grid.interior_begin(); i < r.grid.interior_begin() + r.grid.interior_size(); ++i) {
        for (Index j = 0; j < x.size(); ++j) {
          if (std::abs(x[j] - r.grid.node(i)) <= 1e-9 * r.grid.h) {
            cols.push_back(i);
            tv.push_back(truth[j]);
            break;
          }
        }
      }
      if (static_cast<Index>(cols.size()) == r.grid.interior_size() && z.rows() > 0) {
        Matrix zc(z.rows(), static_cast<Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) zc.col(static_cast<Index>(k)) = z.col(cols[k]);
        r.report.ec_grid = ec(credible_band(zc), to_vector(tv));
      }
    }
    if (c.timing) {
      add_timing(r.report, r.trace.burn_seconds, r.trace.kept_seconds);
      out.write(sub + "timing.csv", "burn_seconds,kept_seconds\n" + format_double(r.trace.burn_seconds) +
                                        "," + format_double(r.trace.kept_seconds) + "\n");
    }
    out.write(sub + "run.cfg", c.to_text());
    out.write(sub + "report.json", r.report.to_json());
  });
  out.commit();
}

void cmd_fit2d(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.data.empty()) fail(ErrorCode::kConfigError, "fit2d needs a data file");
  const CsvTable table = read_csv(cfg.data);
  const Vector x1 = to_vector(table.column("x1"));
  const Vector x2 = to_vector(table.column("x2"));
  const Vector y = to_vector(table.column("y"));
  const std::vector<std::uint8_t> missing =
      table.has("missing") ? flags_from(table.column("missing")) : std::vector<std::uint8_t>{};
  bool have_truth = false;
  const CsvTable truth_table = read_optional_truth(cfg, &have_truth);
  Vector truth_rows;
  if (have_truth) {
    truth_rows = truth_for_rows(truth_table, x1, "x1");
    const Vector check = truth_for_rows(truth_table, x2, "x2");
    (void)check;
  }

  OutputSet out(cfg.out);
  for_each_chain(cfg, out, [&](const RunConfig& c, const std::string& sub) {
    FitResult2D r = fit_2d(c, x1, x2, y, missing, c.seed);
    const Grid2D& g = r.data.grid;
    const double scale = r.standardization.scale;
    const Trace2D& t = r.trace;
    const Index kept = t.samples();

    Matrix z(kept, g.n1() + g.n2() + 1);
    for (Index i = 0; i < kept; ++i) {
      z.row(i) << t.z1.row(i) * scale, t.z2.row(i) * scale,
          t.intercept[static_cast<std::size_t>(i)] * scale + r.standardization.mean;
    }
    std::vector<std::string> zh = numbered("z1_", g.n1());
    for (const auto& s : numbered("z2_", g.n2())) zh.push_back(s);
    zh.emplace_back("intercept");
    out.write_matrix(sub + "trace_z.csv", zh, z);

    Matrix ell(kept, g.n1() + g.n2());
    if (kept > 0) ell << t.u1.array().exp().matrix(), t.u2.array().exp().matrix();
    std::vector<std::string> eh = numbered("ell1_", g.n1());
    for (const auto& s : numbered("ell2_", g.n2())) eh.push_back(s);
    out.write_matrix(sub + "trace_ell.csv", eh, ell);

    const int fields = c.interaction ? 4 : 2;
    Matrix sc(kept, fields + 2);
    std::vector<std::string> sh = {"iteration"};
    for (int f = 0; f < fields; ++f) sh.push_back("lambda" + std::to_string(f + 1));
    sh.emplace_back("sigma2");
    for (Index i = 0; i < kept; ++i) {
      const auto k = static_cast<std::size_t>(i);
      sc(i, 0) = static_cast<double>(t.burnin + t.thin * (i + 1));
      for (int f = 0; f < fields; ++f) sc(i, 1 + f) = t.lambda[static_cast<std::size_t>(f)][k];
      sc(i, fields + 1) = t.sigma2[k] * scale * scale;
    }
    out.write_matrix(sub + "trace_scalars.csv", sh, sc);
    if (r.fitted.rows() > 0) {
      out.write_matrix(sub + "trace_fitted.csv", numbered("f", r.fitted.cols()), r.fitted);
    }

    const auto nc = static_cast<Index>(t.fitted_cells.size());
    Matrix cells(nc, 7);
    std::vector<Index> rows_with_truth;
    std::vector<double> truth_vals;
    for (Index k = 0; k < nc; ++k) {
      const Index cell = t.fitted_cells[static_cast<std::size_t>(k)];
      const Index row = g.data_row[static_cast<std::size_t>(cell)];
      const bool observed = g.kind[static_cast<std::size_t>(cell)] == CellKind::kObserved;
      cells.row(k) << g.axis1.node(cell / g.n2()), g.axis2.node(cell % g.n2()),
          static_cast<double>(row), observed ? 1.0 : 0.0,
          kept > 0 ? r.fitted_mean[k] : 0.0, kept > 0 ? r.band.lo[k] : 0.0, kept > 0 ? r.band.hi[k] : 0.0;
      if (have_truth && row >= 0) {
        rows_with_truth.push_back(k);
        truth_vals.push_back(truth_rows[row]);
      }
    }
    out.write_matrix(sub + "cells.csv", {"x1", "x2", "row", "observed", "mean", "lo", "hi"}, cells);
    Matrix gridm(g.n1() + g.n2(), 4);
    for (Index i = 0; i < g.n1(); ++i) {
      const bool inside = i >= g.axis1.interior_begin() && i < g.axis1.interior_begin() + g.axis1.interior_size();
      gridm.row(i) << 1.0, static_cast<double>(i), g.axis1.node(i), inside ? 1.0 : 0.0;
    }
    for (Index i = 0; i < g.n2(); ++i) {
      const bool inside = i >= g.axis2.interior_begin() && i < g.axis2.interior_begin() + g.axis2.interior_size();
      gridm.row(g.n1() + i) << 2.0, static_cast<double>(i), g.axis2.node(i), inside ? 1.0 : 0.0;
    }
    out.write_matrix(sub + "grid.csv", {"axis", "index", "x", "interior"}, gridm);
    if (c.interaction && t.z3_summary.count > 0) {
      Matrix z3(g.cells(), 4);
      const Vector sd = t.z3_summary.sd();
      for (Index cell = 0; cell < g.cells(); ++cell) {
        z3.row(cell) << g.axis1.node(cell / g.n2()), g.axis2.node(cell % g.n2()),
            t.z3_summary.mean[cell] * scale, sd[cell] * scale;
      }
      out.write_matrix(sub + "z3_summary.csv", {"x1", "x2", "mean", "sd"}, z3);
    }
    if (have_truth && kept > 0) {
      Vector m(static_cast<Index>(rows_with_truth.size()));
      CredibleBand b{Vector(m.size()), Vector(m.size())};
      for (std::size_t k = 0; k < rows_with_truth.size(); ++k) {
        const auto i = static_cast<Index>(k);
        m[i] = r.fitted_mean[rows_with_truth[k]];
        b.lo[i] = r.band.lo[rows_with_truth[k]];
        b.hi[i] = r.band.hi[rows_with_truth[k]];
      }
      r.report.mae = mae(m, to_vector(truth_vals));
      r.report.ec = ec(b, to_vector(truth_vals));
    }
    if (c.timing) {
      add_timing(r.report, t.burn_seconds, t.kept_seconds);
      out.write(sub + "timing.csv", "burn_seconds,kept_seconds\n" + format_double(t.burn_seconds) + "," +
                                        format_double(t.kept_seconds) + "\n");
    }
    out.write(sub + "run.cfg", c.to_text());
    out.write(sub + "report.json", r.report.to_json());
  });
  out.commit();
}

void cmd_diagnose(const RunConfig& cfg) {
  if (cfg.run.empty()) fail(ErrorCode::kConfigError, "diagnose needs a run directory");
  const fs::path run(cfg.run);
  const CsvTable scalars = read_csv((run / "trace_scalars.csv").string());
  std::vector<ScalarTrace> st;
  for (std::size_t i = 0; i < scalars.header.size(); ++i) st.push_back({scalars.header[i], scalars.columns[i]});

  Matrix log_ell;
  std::vector<Index> interior;
  if (fs::exists(run / "trace_ell.csv")) {
    const CsvTable ell = read_csv((run / "trace_ell.csv").string());
    log_ell.resize(ell.rows(), static_cast<Index>(ell.header.size()));
    for (Index c = 0; c < log_ell.cols(); ++c) {
      log_ell.col(c) = to_vector(ell.columns[static_cast<std::size_t>(c)]).array().log().matrix();
    }
    if (fs::exists(run / "grid.csv")) {
      const CsvTable g = read_csv((run / "grid.csv").string());
      const auto& in = g.column("interior");
      for (std::size_t k = 0; k < in.size(); ++k) {
        if (in[k] == 1.0) interior.push_back(static_cast<Index>(k));
      }
    }
  }
  Matrix fitted;
  if (fs::exists(run / "trace_fitted.csv")) {
    const CsvTable f = read_csv((run / "trace_fitted.csv").string());
    fitted.resize(f.rows(), static_cast<Index>(f.header.size()));
    for (Index c = 0; c < fitted.cols(); ++c) fitted.col(c) = to_vector(f.columns[static_cast<std::size_t>(c)]);
  }
  FitReport r = summarize(st, log_ell, interior, fitted, nullptr, nullptr);
  RunConfig meta;
  if (fs::exists(run / "run.cfg")) meta.load_file((run / "run.cfg").string());
  const bool two_d = fs::exists(run / "cells.csv");
  r.model = two_d ? (meta.interaction ? "2d-interaction" : "2d") : "1d";
  r.sampler = two_d ? "block-mellss" : meta.sampler;
  r.hyperprior = meta.hyperprior;
  r.iterations = meta.iterations;
  r.burnin = static_cast<long long>(std::floor(meta.burnin * static_cast<double>(meta.iterations)));
  r.thin = meta.thin;
  r.kept = scalars.rows();

  if (!cfg.truth.empty() && fitted.rows() > 0) {
    const CsvTable truth = read_csv(cfg.truth);
    const auto& tv = truth.column("truth");
    if (two_d) {
      const CsvTable cells = read_csv((run / "cells.csv").string());
      const auto& rows = cells.column("row");
      std::vector<double> m;
      std::vector<double> lo;
      std::vector<double> hi;
      std::vector<double> t;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] < 0) continue;
        const auto row = static_cast<std::size_t>(rows[k]);
        if (row >= tv.size()) fail(ErrorCode::kDimensionMismatch, "truth has too few rows");
        m.push_back(r.posterior_mean[k]);
        lo.push_back(r.band_lo[k]);
        hi.push_back(r.band_hi[k]);
        t.push_back(tv[row]);
      }
      r.mae = mae(to_vector(m), to_vector(t));
      r.ec = ec(CredibleBand{to_vector(lo), to_vector(hi)}, to_vector(t));
    } else {
      add_truth(r, to_vector(tv));
    }
  }
  if (fs::exists(run / "timing.csv")) {
    const CsvTable timing = read_csv((run / "timing.csv").string());
    add_timing(r, timing.column("burn_seconds").at(0), timing.column("kept_seconds").at(0));
  }
  OutputSet out(cfg.out);
  write_report(out, r);
  out.commit();
}

}  // namespace nsgp
