// SPDX-License-Identifier: Apache-2.0
//
// mmwsync: joint CFO and wideband mmWave channel estimation with bilinear
// message passing
// Copyright (C) 2026 The mmwsync authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Command-line front end; talks to the library only through the C API.
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mmwsync/mmwsync.h"

namespace {

enum Exit { kOk = 0, kError = 1, kIo = 2, kDiverged = 3, kSelftestFailed = 4 };

int report(mmws_status st, const char* what) {
  std::fprintf(stderr, "mmwsync: %s: %s (%s)\n", what, mmws_last_error(), mmws_status_string(st));
  if (st == MMWS_ERR_IO) return kIo;
  if (st == MMWS_ERR_DIVERGENCE) return kDiverged;
  return kError;
}

void print_line(const char* line, void*) { std::printf("%s\n", line); }

struct RunArgs {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int trials = 0;
  int workers = 0;
  std::vector<std::string> sweeps;
  bool quiet = false;
};

int cmd_run(const RunArgs& a) {
  mmws_experiment* exp = nullptr;
  mmws_status st = mmws_experiment_load(a.config.c_str(), &exp);
  if (st != MMWS_OK) return report(st, "loading config");
  struct Guard {
    mmws_experiment* e;
    ~Guard() { mmws_experiment_destroy(e); }
  } guard{exp};

  if (a.seed_set && (st = mmws_experiment_set_seed(exp, a.seed)) != MMWS_OK)
    return report(st, "--seed");
  if (a.trials > 0 && (st = mmws_experiment_set_trials(exp, a.trials)) != MMWS_OK)
    return report(st, "--trials");
  if (a.workers > 0 && (st = mmws_experiment_set_workers(exp, a.workers)) != MMWS_OK)
    return report(st, "--workers");
  for (const auto& s : a.sweeps)
    if ((st = mmws_experiment_add_sweep(exp, s.c_str())) != MMWS_OK) return report(st, "--sweep");

  int points = 0;
  if ((st = mmws_experiment_num_points(exp, &points)) != MMWS_OK) return report(st, "expanding sweeps");
  if (!a.quiet) std::fprintf(stderr, "mmwsync: %d sweep point(s), writing to %s\n", points, a.out.c_str());

  int diverged = 0;
  st = mmws_experiment_run(exp, a.out.c_str(), a.quiet ? nullptr : print_line, nullptr, &diverged);
  if (st != MMWS_OK) return report(st, "run");
  return kOk;
}

int cmd_figures(const std::string& in, std::string out) {
  if (out.empty()) out = in + "/figures";
  const mmws_status st = mmws_figures(in.c_str(), out.c_str(), print_line, nullptr);
  if (st != MMWS_OK) return report(st, "figures");
  return kOk;
}

int cmd_selftest(std::uint64_t seed) {
  int failures = 0;
  const mmws_status st = mmws_selftest(seed, print_line, nullptr, &failures);
  if (st != MMWS_OK) return report(st, "selftest");
  std::printf("%s: %d failure(s)\n", failures ? "FAILED" : "OK", failures);
  return failures ? kSelftestFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint CFO and wideband mmWave channel estimation experiments"};
  app.set_version_flag("--version", std::string(mmws_version()));
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a Monte Carlo experiment");
  run_cmd->add_option("--config", run.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
  auto* seed_opt = run_cmd->add_option("--seed", run.seed, "Master seed (overrides config)");
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--trials", run.trials, "Trials per sweep point (overrides config)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--workers", run.workers, "Worker threads (overrides config)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--sweep", run.sweeps, "key=v1,v2,... (repeatable)")->take_all();
  run_cmd->add_flag("--quiet", run.quiet, "Do not echo records");

  std::string fig_in, fig_out;
  auto* fig_cmd = app.add_subcommand("figures", "Aggregate records into per-figure CSVs");
  fig_cmd->add_option("--in", fig_in, "Directory holding records.csv")->required();
  fig_cmd->add_option("--out", fig_out, "Output directory (default IN/figures)");

  std::uint64_t st_seed = 1;
  auto* st_cmd = app.add_subcommand("selftest", "Run the oracle equivalence suite");
  st_cmd->add_option("--seed", st_seed, "Seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  run.seed_set = seed_opt->count() > 0;

  if (*run_cmd) return cmd_run(run);
  if (*fig_cmd) return cmd_figures(fig_in, fig_out);
  if (*st_cmd) return cmd_selftest(st_seed);
  return kError;
}
