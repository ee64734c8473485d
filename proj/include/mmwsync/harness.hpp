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

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mmwsync/channel.hpp"
#include "mmwsync/measurement.hpp"
#include "mmwsync/pbigamp.hpp"
#include "mmwsync/training.hpp"

namespace mmwsync::harness {

struct ChannelConfig {
  std::string model = "clustered";  // clustered | exact_sparse
  int N_cs = 4;
  int rays_per_cluster = 5;
  double angle_spread = 15.0;     // degrees
  double delay_spread_max = 0.0;  // seconds; <= 0 means (L - 1) T
  int nonzeros = 8;               // exact_sparse only
  int norm_ensemble = 500;
};

// CFO values are either digital (radians per sample), ppm of f1, or DFT bins
// (epsilon = 2 pi bins / Np).
struct CfoConfig {
  std::string mode = "epsilon";
  std::vector<double> values{0.0};
};

// Optional prior overrides; unset fields take Hyperparams::defaults.
struct PriorConfig {
  std::optional<double> lambda_b;
  std::optional<double> lambda_c;
  std::optional<double> sigma_b2;
  std::optional<double> sigma_c2;
};

// snr_db entries may be +infinity for noiseless observation.
struct ExperimentConfig {
  int Nrx = 8;
  int Ntx = 8;
  int L = 4;
  int Np = 256;
  double f1 = 38e9;
  double T = 10e-9;
  double P = 1.0;
  ChannelConfig channel;
  training::TrainingKind training = training::TrainingKind::IID_QPSK;
  measurement::Quantizer q = measurement::Quantizer::OneBit;
  std::vector<double> snr_db{0.0};
  CfoConfig cfo;
  double beta = 0.0;
  int trials = 10;
  pbigamp::GampConfig solver;
  PriorConfig prior;
  std::uint64_t seed = 1;
  std::string output = "out";
  int workers = 1;
  double success_threshold = 0.1;
  double trim_fraction = 0.0;
  bool write_traces = false;
  std::string fixtures = "none";  // none | csv | bin

  void validate() const;
  Dims dims() const { return {Nrx, Ntx, L, Np}; }
};

/// Parses a JSON document; unknown keys are rejected.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg, int indent = 2);

// One "--sweep key=v1,v2,..." argument. Keys name config fields; dotted keys
// reach nested objects ("solver.damping"); "ppm", "epsilon" and "bins" set the
// CFO mode and value.
struct SweepSpec {
  std::string key;
  std::vector<std::string> values;
};

SweepSpec parse_sweep(const std::string& arg);

// A single-valued configuration: one SNR and one CFO value.
struct ExperimentPoint {
  int index = 0;
  ExperimentConfig cfg;
  double snr_db = 0.0;
  double cfo_value = 0.0;
  double epsilon = 0.0;
  double norm_constant = 1.0;
};

/// Cartesian product of the sweeps, then SNR list, then CFO list. Sweeps over
/// snr_db, ppm, epsilon or bins replace the corresponding list.
std::vector<ExperimentPoint> expand_points(const ExperimentConfig& cfg,
                                           const std::vector<SweepSpec>& sweeps);

struct MetricRecord {
  int point = 0;
  int trial = 0;
  std::uint64_t trial_seed = 0;
  int Nrx = 0;
  int Ntx = 0;
  int L = 0;
  int Np = 0;
  std::string training;
  std::string q;
  std::string channel_model;
  double snr_db = 0.0;
  std::string cfo_mode;
  double cfo_value = 0.0;
  double epsilon = 0.0;
  double beta = 0.0;
  double nmse = 1.0;
  double nmse_db = 0.0;
  double gamma_re = 0.0;
  double gamma_im = 0.0;
  double eps_hat = 0.0;
  double cfo_sq_err = 0.0;
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
  std::string status = "ok";  // ok | diverged | failed
  double wall_time = 0.0;     // seconds, always the last CSV column
};

std::string records_csv_header();
std::string to_csv_row(const MetricRecord& r);
std::vector<MetricRecord> read_records_csv(const std::string& path);

struct NmseResult {
  double nmse = 1.0;
  cplx gamma;
};

/// gamma = <C_hat, C> / ||C_hat||^2, nmse = ||C - gamma C_hat||^2 / ||C||^2.
NmseResult nmse(const cmat& C, const cmat& C_hat);

/// Seed of trial `trial` under master seed `seed`; independent of the sweep point.
std::uint64_t trial_seed(std::uint64_t seed, int trial);

// Everything a single trial draws and produces.
struct TrialArtifacts {
  channel::AngleDelayChannel C;
  training::TrainingBlock T;
  measurement::ReceivedBlock Y;
  cvec d;
  pbigamp::RunResult result;
};

MetricRecord run_trial(const ExperimentPoint& pt, int trial, TrialArtifacts* artifacts = nullptr);

struct PointSummary {
  int point = 0;
  int trials = 0;
  double median_nmse_db = 0.0;
  double mean_nmse_db = 0.0;
  double trimmed_mean_nmse_db = 0.0;
  double cfo_mse = 0.0;
  double success_fraction = 0.0;
  int diverged = 0;
};

PointSummary summarize(const std::vector<MetricRecord>& records, int point,
                       double success_threshold, double trim_fraction);

struct RunOptions {
  std::string out_dir;  // empty: nothing is written
  std::function<void(const MetricRecord&)> on_record;
};

struct RunSummary {
  std::vector<ExperimentPoint> points;
  std::vector<MetricRecord> records;
  std::vector<PointSummary> summaries;
  bool any_diverged = false;
};

/// Runs every (point, trial) pair on a bounded worker pool. Records are
/// emitted and written in (point, trial) order as soon as they are ready.
RunSummary run_experiment(const ExperimentConfig& cfg, const std::vector<SweepSpec>& sweeps,
                          const RunOptions& opts = {});

struct CdfRow {
  double nse = 0.0;
  double fraction = 0.0;
};

/// Empirical CDF of the per-trial NSE. Throws on an empty set.
std::vector<CdfRow> nse_cdf(const std::vector<MetricRecord>& records);

/// Fraction of records with NSE below the threshold.
double success_fraction(const std::vector<MetricRecord>& records, double threshold);

/// Mean of the best (1 - trim_fraction) share of the values.
double trimmed_mean(std::vector<double> values, double trim_fraction);

double median(std::vector<double> values);

double to_db(double x);

}  // namespace mmwsync::harness
