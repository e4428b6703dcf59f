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

#include <CLI11.hpp>

#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace {

struct Bound {
  std::string key;
  CLI::Option* option = nullptr;
  bool flag = false;
};

struct Command {
  CLI::App* app = nullptr;
  std::string config_file;
  std::map<std::string, std::string> values;
  std::vector<Bound> bound;
  int (*run)(const nsgp_config*) = nullptr;

  CLI::Option* option(const std::string& flag, const std::string& key, const std::string& help) {
    bound.push_back({key, app->add_option(flag, values[key], help), false});
    return bound.back().option;
  }
  void toggle(const std::string& flag, const std::string& key, const std::string& help) {
    bound.push_back({key, app->add_flag(flag, help), true});
  }
};

void add_model_options(Command& c) {
  c.option("--hyperprior", "hyperprior", "ar1, se or const");
  c.option("--iters,--iterations", "iterations", "MCMC iterations");
  c.option("--burnin", "burnin", "burn-in fraction in [0, 1)");
  c.option("--thin", "thin", "keep every k-th post burn-in draw");
  c.option("--initial-scale", "initial_scale", "starting random-walk scale");
  c.option("--log-lambda-mean", "log_lambda_mean", "prior mean of log lambda");
  c.option("--log-lambda-var", "log_lambda_var", "prior variance of log lambda");
  c.option("--log-sigma2-mean", "log_sigma2_mean", "prior mean of log noise variance");
  c.option("--log-sigma2-var", "log_sigma2_var", "prior variance of log noise variance");
  c.option("--mu-ell", "mu_ell", "mean of the log length-scale prior");
  c.option("--tau-ell", "tau_ell", "magnitude of the log length-scale prior");
  c.toggle("--elicit", "elicit", "set mu_ell and tau_ell from covariate distances");
  c.option("--chains", "chains", "independent chains with seeds seed, seed+1, ...");
  c.toggle("--timing", "timing", "add wall-clock fields and OES to the report");
  c.option("--truth", "truth", "noise-free values for MAE and coverage");
}

int run_command(const Command& c) {
  nsgp_config* cfg = nullptr;
  int status = nsgp_config_create(&cfg);
  if (status == NSGP_OK && !c.config_file.empty()) status = nsgp_config_load(cfg, c.config_file.c_str());
  for (const Bound& b : c.bound) {
    if (status != NSGP_OK) break;
    if (b.option->count() == 0) continue;
    const std::string value = b.flag ? "true" : c.values.at(b.key);
    status = nsgp_config_set(cfg, b.key.c_str(), value.c_str());
  }
  if (status == NSGP_OK) status = c.run(cfg);
  if (status != NSGP_OK) {
    std::fprintf(stderr, "nsgp: %s: %s\n", nsgp_status_name(status), nsgp_last_error());
  }
  nsgp_config_destroy(cfg);
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-level Gaussian process regression with sparse SPDE priors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nsgp_version()));

  std::vector<Command> commands(4);
  const std::pair<const char*, const char*> names[] = {
      {"simulate", "generate a synthetic data set"},
      {"fit", "fit a 1-D model"},
      {"fit2d", "fit a 2-D additive model"},
      {"diagnose", "summarize an existing run"},
  };
  int (*runners[])(const nsgp_config*) = {nsgp_simulate, nsgp_fit, nsgp_fit2d, nsgp_diagnose};
  for (std::size_t i = 0; i < commands.size(); ++i) {
    Command& c = commands[i];
    c.app = app.add_subcommand(names[i].first, names[i].second);
    c.run = runners[i];
    c.app->add_option("--config", c.config_file, "flat key = value file; flags override it");
    c.option("--out", "out", "output directory");
    c.option("--seed", "seed", "random seed");
  }

  Command& sim = commands[0];
  sim.option("--experiment", "experiment", "exp1, exp2, exp3 or exp4");
  sim.option("--m", "m", "number of 1-D observations");
  sim.option("--n1", "n1", "2-D grid size along x1");
  sim.option("--n2", "n2", "2-D grid size along x2");
  sim.option("--noise-variance", "noise_variance", "noise variance");
  sim.option("--snr", "snr", "signal-to-noise ratio for exp3");

  Command& fit = commands[1];
  fit.option("--data", "data", "CSV with columns x,y")->required();
  fit.option("--sampler", "sampler", "mwg, wellss or mellss");
  fit.option("--n", "n", "total grid size");
  fit.option("--ext", "ext", "extension nodes per side");
  fit.option("--site-scale", "site_scale", "initial site scale for mwg");
  add_model_options(fit);

  Command& fit2 = commands[2];
  fit2.option("--data", "data", "CSV with columns x1,x2,y,missing")->required();
  fit2.option("--ext", "ext", "extension nodes per side on both axes");
  fit2.option("--ext1", "ext1", "extension nodes per side along x1");
  fit2.option("--ext2", "ext2", "extension nodes per side along x2");
  fit2.toggle("--interaction", "interaction", "include the separable interaction term");
  add_model_options(fit2);

  Command& diag = commands[3];
  diag.option("--run", "run", "directory written by fit or fit2d")->required();
  diag.option("--truth", "truth", "noise-free values for MAE and coverage");

  CLI11_PARSE(app, argc, argv);
  for (const Command& c : commands) {
    if (c.app->parsed()) return run_command(c);
  }
  return NSGP_INTERNAL;
}
