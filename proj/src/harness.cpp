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

#include "mmwsync/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mmwsync/errors.hpp"
#include "mmwsync/estimators.hpp"
#include "mmwsync/fixture_io.hpp"
#include "mmwsync/phase.hpp"

#ifndef MMWSYNC_GIT_DESCRIBE
#define MMWSYNC_GIT_DESCRIBE "unknown"
#endif

namespace mmwsync::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kTopKeys[] = {"Nrx",   "Ntx",    "L",          "Np",      "f1",
                          "T",     "P",      "channel",    "training", "q",
                          "snr_db", "cfo",   "beta",       "trials",  "solver",
                          "prior", "seed",   "output",     "workers", "success_threshold",
                          "trim_fraction", "write_traces", "fixtures"};

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return it.key() == k; }))
      fail(ErrorCode::Parse, std::string("config: unknown key '") + it.key() + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

double parse_snr(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "noiseless" || s == "Infinity")
      return std::numeric_limits<double>::infinity();
    try {
      return std::stod(s);
    } catch (const std::exception&) {
    }
  }
  fail(ErrorCode::Parse, "config: snr_db entries must be numbers or \"inf\"");
}

json snr_to_json(double snr) {
  if (std::isinf(snr)) return "inf";
  return snr;
}

std::string quantizer_name(measurement::Quantizer q) { return measurement::to_string(q); }

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(s);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(dims().valid(), ErrorCode::InvalidDimension, "config: dimensions must be positive");
  require(trials >= 1, ErrorCode::InvalidArgument, "config: trials must be >= 1");
  require(!snr_db.empty(), ErrorCode::InvalidArgument, "config: snr_db must not be empty");
  require(!cfo.values.empty(), ErrorCode::InvalidArgument, "config: cfo values must not be empty");
  require(cfo.mode == "epsilon" || cfo.mode == "ppm" || cfo.mode == "bins",
          ErrorCode::InvalidArgument, "config: cfo mode must be epsilon, ppm or bins");
  require(channel.model == "clustered" || channel.model == "exact_sparse",
          ErrorCode::InvalidArgument, "config: channel.model must be clustered or exact_sparse");
  require(channel.nonzeros >= 1 && channel.nonzeros <= Nrx * Ntx * L, ErrorCode::InvalidArgument,
          "config: channel.nonzeros out of range");
  require(channel.norm_ensemble >= 1, ErrorCode::InvalidArgument,
          "config: channel.norm_ensemble must be >= 1");
  require(beta >= 0.0, ErrorCode::InvalidArgument, "config: beta must be >= 0");
  require(P > 0.0 && T > 0.0 && f1 > 0.0, ErrorCode::InvalidArgument,
          "config: P, T and f1 must be positive");
  require(workers >= 1, ErrorCode::InvalidArgument, "config: workers must be >= 1");
  require(trim_fraction >= 0.0 && trim_fraction < 1.0, ErrorCode::InvalidArgument,
          "config: trim_fraction must lie in [0, 1)");
  require(fixtures == "none" || fixtures == "csv" || fixtures == "bin",
          ErrorCode::InvalidArgument, "config: fixtures must be none, csv or bin");
  solver.validate();
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("config: ") + e.what());
  }
  require(j.is_object(), ErrorCode::Parse, "config: top level must be an object");
  ExperimentConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (std::none_of(std::begin(kTopKeys), std::end(kTopKeys),
                       [&](const char* k) { return it.key() == k; }))
        fail(ErrorCode::Parse, "config: unknown key '" + it.key() + "'");
    }
    read(j, "Nrx", c.Nrx);
    read(j, "Ntx", c.Ntx);
    read(j, "L", c.L);
    read(j, "Np", c.Np);
    read(j, "f1", c.f1);
    read(j, "T", c.T);
    read(j, "P", c.P);
    if (j.contains("channel")) {
      const json& ch = j.at("channel");
      reject_unknown(ch, {"model", "N_cs", "rays_per_cluster", "angle_spread", "delay_spread_max",
                          "nonzeros", "norm_ensemble"},
                     "channel");
      read(ch, "model", c.channel.model);
      read(ch, "N_cs", c.channel.N_cs);
      read(ch, "rays_per_cluster", c.channel.rays_per_cluster);
      read(ch, "angle_spread", c.channel.angle_spread);
      read(ch, "delay_spread_max", c.channel.delay_spread_max);
      read(ch, "nonzeros", c.channel.nonzeros);
      read(ch, "norm_ensemble", c.channel.norm_ensemble);
    }
    if (j.contains("training"))
      c.training = training::parse_training_kind(j.at("training").get<std::string>());
    if (j.contains("q")) {
      const json& q = j.at("q");
      c.q = measurement::parse_quantizer(q.is_number() ? std::to_string(q.get<int>())
                                                       : q.get<std::string>());
    }
    if (j.contains("snr_db")) {
      const json& s = j.at("snr_db");
      c.snr_db.clear();
      if (s.is_array()) {
        for (const auto& v : s) c.snr_db.push_back(parse_snr(v));
      } else {
        c.snr_db.push_back(parse_snr(s));
      }
    }
    if (j.contains("cfo")) {
      const json& cf = j.at("cfo");
      require(cf.is_object() && cf.size() == 1, ErrorCode::Parse,
              "config: cfo must hold exactly one of epsilon, ppm, bins");
      reject_unknown(cf, {"epsilon", "ppm", "bins"}, "cfo");
      c.cfo.mode = cf.begin().key();
      const json& v = cf.begin().value();
      c.cfo.values = v.is_array() ? v.get<std::vector<double>>()
                                  : std::vector<double>{v.get<double>()};
    }
    read(j, "beta", c.beta);
    read(j, "trials", c.trials);
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      reject_unknown(s, {"t_max", "tau_stop", "damping", "em_outer_iters", "restarts",
                         "modulus_spread_max", "init_seed", "variance_floor", "learn_hyperparams"},
                     "solver");
      read(s, "t_max", c.solver.t_max);
      read(s, "tau_stop", c.solver.tau_stop);
      read(s, "damping", c.solver.damping);
      read(s, "em_outer_iters", c.solver.em_outer_iters);
      read(s, "restarts", c.solver.restarts);
      read(s, "modulus_spread_max", c.solver.modulus_spread_max);
      read(s, "init_seed", c.solver.init_seed);
      read(s, "variance_floor", c.solver.variance_floor);
      read(s, "learn_hyperparams", c.solver.learn_hyperparams);
    }
    if (j.contains("prior")) {
      const json& p = j.at("prior");
      reject_unknown(p, {"lambda_b", "lambda_c", "sigma_b2", "sigma_c2"}, "prior");
      if (p.contains("lambda_b")) c.prior.lambda_b = p.at("lambda_b").get<double>();
      if (p.contains("lambda_c")) c.prior.lambda_c = p.at("lambda_c").get<double>();
      if (p.contains("sigma_b2")) c.prior.sigma_b2 = p.at("sigma_b2").get<double>();
      if (p.contains("sigma_c2")) c.prior.sigma_c2 = p.at("sigma_c2").get<double>();
    }
    read(j, "seed", c.seed);
    read(j, "output", c.output);
    read(j, "workers", c.workers);
    read(j, "success_threshold", c.success_threshold);
    read(j, "trim_fraction", c.trim_fraction);
    read(j, "write_traces", c.write_traces);
    read(j, "fixtures", c.fixtures);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::Io, "cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return config_from_json(ss.str());
}

namespace {

json config_json(const ExperimentConfig& c) {
  json j;
  j["Nrx"] = c.Nrx;
  j["Ntx"] = c.Ntx;
  j["L"] = c.L;
  j["Np"] = c.Np;
  j["f1"] = c.f1;
  j["T"] = c.T;
  j["P"] = c.P;
  j["channel"] = {{"model", c.channel.model},
                  {"N_cs", c.channel.N_cs},
                  {"rays_per_cluster", c.channel.rays_per_cluster},
                  {"angle_spread", c.channel.angle_spread},
                  {"delay_spread_max", c.channel.delay_spread_max},
                  {"nonzeros", c.channel.nonzeros},
                  {"norm_ensemble", c.channel.norm_ensemble}};
  j["training"] = training::to_string(c.training);
  j["q"] = quantizer_name(c.q);
  json snr = json::array();
  for (double s : c.snr_db) snr.push_back(snr_to_json(s));
  j["snr_db"] = snr;
  j["cfo"] = {{c.cfo.mode, c.cfo.values}};
  j["beta"] = c.beta;
  j["trials"] = c.trials;
  j["solver"] = {{"t_max", c.solver.t_max},
                 {"tau_stop", c.solver.tau_stop},
                 {"damping", c.solver.damping},
                 {"em_outer_iters", c.solver.em_outer_iters},
                 {"restarts", c.solver.restarts},
                 {"modulus_spread_max", c.solver.modulus_spread_max},
                 {"init_seed", c.solver.init_seed},
                 {"variance_floor", c.solver.variance_floor},
                 {"learn_hyperparams", c.solver.learn_hyperparams}};
  json prior = json::object();
  if (c.prior.lambda_b) prior["lambda_b"] = *c.prior.lambda_b;
  if (c.prior.lambda_c) prior["lambda_c"] = *c.prior.lambda_c;
  if (c.prior.sigma_b2) prior["sigma_b2"] = *c.prior.sigma_b2;
  if (c.prior.sigma_c2) prior["sigma_c2"] = *c.prior.sigma_c2;
  j["prior"] = prior;
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["workers"] = c.workers;
  j["success_threshold"] = c.success_threshold;
  j["trim_fraction"] = c.trim_fraction;
  j["write_traces"] = c.write_traces;
  j["fixtures"] = c.fixtures;
  return j;
}

json parse_scalar(const std::string& s) {
  try {
    return json::parse(s);
  } catch (const json::exception&) {
    return s;
  }
}

void apply_sweep(json& j, const std::string& key, const std::string& value) {
  json* node = &j;
  std::string rest = key;
  for (auto dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
    const std::string head = rest.substr(0, dot);
    require(node->contains(head) && node->at(head).is_object(), ErrorCode::Parse,
            ("sweep: unknown key " + key).c_str());
    node = &(*node)[head];
    rest = rest.substr(dot + 1);
  }
  require(node->contains(rest), ErrorCode::Parse, ("sweep: unknown key " + key).c_str());
  (*node)[rest] = parse_scalar(value);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng stream(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), tag};
  return Rng(seq);
}

enum StreamTag : std::uint32_t {
  kChannel = 1,
  kPhase = 2,
  kTraining = 3,
  kNoise = 4,
  kSolver = 5,
  kNormalization = 6,
};

channel::ChannelGenParams gen_params(const ExperimentConfig& c) {
  channel::ChannelGenParams p;
  p.N_cs = c.channel.N_cs;
  p.rays_per_cluster = c.channel.rays_per_cluster;
  p.angle_spread = c.channel.angle_spread * kPi / 180.0;
  p.delay_spread_max = c.channel.delay_spread_max;
  p.Nrx = c.Nrx;
  p.Ntx = c.Ntx;
  p.L = c.L;
  p.T = c.T;
  return p;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg, int indent) {
  return config_json(cfg).dump(indent);
}

SweepSpec parse_sweep(const std::string& arg) {
  const auto eq = arg.find('=');
  require(eq != std::string::npos && eq > 0 && eq + 1 < arg.size(), ErrorCode::Parse,
          "sweep: expected key=v1,v2,...");
  SweepSpec s;
  s.key = arg.substr(0, eq);
  std::stringstream ss(arg.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    require(!item.empty(), ErrorCode::Parse, "sweep: empty value");
    s.values.push_back(item);
  }
  return s;
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  return mix64(mix64(seed) ^ static_cast<std::uint64_t>(trial));
}

std::vector<ExperimentPoint> expand_points(const ExperimentConfig& cfg,
                                           const std::vector<SweepSpec>& sweeps) {
  cfg.validate();
  // SNR and CFO sweeps replace the inner lists; the rest form the outer product.
  json base = config_json(cfg);
  std::vector<SweepSpec> outer;
  std::size_t combos = 1;
  for (const auto& s : sweeps) {
    require(!s.values.empty(), ErrorCode::Parse, "sweep: no values");
    if (s.key == "snr_db") {
      json list = json::array();
      for (const auto& v : s.values) list.push_back(snr_to_json(parse_double(v)));
      base["snr_db"] = list;
    } else if (s.key == "ppm" || s.key == "epsilon" || s.key == "bins") {
      json list = json::array();
      for (const auto& v : s.values) list.push_back(parse_double(v));
      base["cfo"] = {{s.key, list}};
    } else {
      outer.push_back(s);
      combos *= s.values.size();
    }
  }
  // The first sweep varies slowest.
  std::vector<ExperimentConfig> configs;
  for (std::size_t n = 0; n < combos; ++n) {
    json j = base;
    std::size_t rem = n;
    for (std::size_t k = outer.size(); k-- > 0;) {
      apply_sweep(j, outer[k].key, outer[k].values[rem % outer[k].values.size()]);
      rem /= outer[k].values.size();
    }
    configs.push_back(config_from_json(j.dump()));
  }

  std::map<std::string, double> norm_cache;
  std::vector<ExperimentPoint> points;
  for (const auto& c : configs) {
    double norm = 1.0;
    if (c.channel.model == "clustered") {
      json key = config_json(c)["channel"];
      key["dims"] = {c.Nrx, c.Ntx, c.L};
      key["T"] = c.T;
      const std::string k = key.dump();
      auto it = norm_cache.find(k);
      if (it == norm_cache.end()) {
        const double s = channel::calibrate_normalization(gen_params(c), c.channel.norm_ensemble,
                                                          mix64(c.seed ^ kNormalization));
        it = norm_cache.emplace(k, s).first;
      }
      norm = it->second;
    }
    for (double snr : c.snr_db) {
      for (double v : c.cfo.values) {
        ExperimentPoint pt;
        pt.index = static_cast<int>(points.size());
        pt.cfg = c;
        pt.cfg.snr_db = {snr};
        pt.cfg.cfo.values = {v};
        pt.snr_db = snr;
        pt.cfo_value = v;
        if (c.cfo.mode == "epsilon") pt.epsilon = v;
        else if (c.cfo.mode == "ppm") pt.epsilon = phase::ppm_to_digital(v, c.f1, c.T);
        else pt.epsilon = 2.0 * kPi * v / c.Np;
        require(std::abs(pt.epsilon) < kPi, ErrorCode::Aliasing,
                "config: CFO aliases (|epsilon| >= pi)");
        pt.norm_constant = norm;
        points.push_back(std::move(pt));
      }
    }
  }
  return points;
}

NmseResult nmse(const cmat& C, const cmat& C_hat) {
  require(C.rows() == C_hat.rows() && C.cols() == C_hat.cols(), ErrorCode::DimensionMismatch,
          "nmse: shapes differ");
  const double cn = C.squaredNorm();
  require(cn > 0.0, ErrorCode::DegenerateInput, "nmse: reference channel is zero");
  const double hn = C_hat.squaredNorm();
  if (hn == 0.0) return {1.0, 0.0};
  const cplx inner = (C_hat.array().conjugate() * C.array()).sum();
  const cplx gamma = inner / hn;
  return {(C - gamma * C_hat).squaredNorm() / cn, gamma};
}

double to_db(double x) { return 10.0 * std::log10(std::max(x, 1e-300)); }

MetricRecord run_trial(const ExperimentPoint& pt, int trial, TrialArtifacts* artifacts) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig& c = pt.cfg;
  MetricRecord rec;
  rec.point = pt.index;
  rec.trial = trial;
  rec.trial_seed = trial_seed(c.seed, trial);
  rec.Nrx = c.Nrx;
  rec.Ntx = c.Ntx;
  rec.L = c.L;
  rec.Np = c.Np;
  rec.training = training::to_string(c.training);
  rec.q = quantizer_name(c.q);
  rec.channel_model = c.channel.model;
  rec.snr_db = pt.snr_db;
  rec.cfo_mode = c.cfo.mode;
  rec.cfo_value = pt.cfo_value;
  rec.epsilon = pt.epsilon;
  rec.beta = c.beta;

  Rng rng_ch = stream(rec.trial_seed, kChannel);
  Rng rng_ph = stream(rec.trial_seed, kPhase);
  Rng rng_tr = stream(rec.trial_seed, kTraining);
  Rng rng_noise = stream(rec.trial_seed, kNoise);
  Rng rng_solver = stream(rec.trial_seed, kSolver);

  channel::AngleDelayChannel C;
  if (c.channel.model == "clustered") {
    const auto params = gen_params(c);
    const auto rays = channel::sample_rays(params, rng_ch);
    C = channel::to_angle_delay(channel::synthesize_taps(rays, params));
    C.C *= pt.norm_constant;
  } else {
    C = channel::sample_exact_sparse(c.Nrx, c.Ntx, c.L, c.channel.nonzeros, rng_ch);
  }
  const cvec d = phase::gen_phase_errors({pt.epsilon, c.beta, c.Np}, rng_ph);
  const cvec b = phase::to_spectrum(d);
  const training::TrainingBlock T = training::gen_training(c.training, c.Ntx, c.Np, c.P, rng_tr);
  const training::EffectiveTraining F = training::assemble_F(T, c.L);
  const cmat Z = measurement::forward_factored(C, F, b);
  const double sigma2 = std::isinf(pt.snr_db) ? 0.0 : measurement::snr_to_sigma2(T, pt.snr_db);
  const measurement::ReceivedBlock Y = measurement::observe(Z, sigma2, c.q, rng_noise);

  pbigamp::Hyperparams hp = pbigamp::Hyperparams::defaults(c.dims(), sigma2);
  if (c.prior.lambda_b) hp.lambda_b = *c.prior.lambda_b;
  if (c.prior.lambda_c) hp.lambda_c = *c.prior.lambda_c;
  if (c.prior.sigma_b2) hp.sigma_b2 = *c.prior.sigma_b2;
  if (c.prior.sigma_c2) hp.sigma_c2 = *c.prior.sigma_c2;
  pbigamp::GampConfig solver = c.solver;
  solver.init_seed = mix64(rng_solver() ^ c.solver.init_seed);

  pbigamp::RunResult result;
  try {
    result = pbigamp::run(Y, F, hp, solver);
    const NmseResult nm = nmse(C.C, result.C_hat);
    rec.nmse = nm.nmse;
    rec.gamma_re = nm.gamma.real();
    rec.gamma_im = nm.gamma.imag();
    rec.iterations = result.iterations;
    rec.restarts = result.restarts_used;
    rec.converged = result.converged;
    try {
      rec.eps_hat = estimators::cfo_estimate(result.b_hat, c.beta, 0.0);
      const double e = estimators::wrap_angle(rec.eps_hat - pt.epsilon);
      rec.cfo_sq_err = e * e;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EstimationFailed) throw;
      rec.eps_hat = 0.0;
      const double err = estimators::wrap_angle(pt.epsilon);
      rec.cfo_sq_err = err * err;
      rec.status = "cfo_failed";
    }
  } catch (const Error& e) {
    rec.status = e.code() == ErrorCode::Divergence ? "diverged" : "failed";
    rec.nmse = 1.0;
    const double err = estimators::wrap_angle(pt.epsilon);
    rec.cfo_sq_err = err * err;
  }
  rec.nmse_db = to_db(rec.nmse);
  if (artifacts) {
    artifacts->C = C;
    artifacts->T = T;
    artifacts->Y = Y;
    artifacts->d = d;
    artifacts->result = std::move(result);
  }
  rec.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::string records_csv_header() {
  return "point,trial,trial_seed,Nrx,Ntx,L,Np,training,q,channel_model,snr_db,cfo_mode,"
         "cfo_value,epsilon,beta,nmse,nmse_db,gamma_re,gamma_im,eps_hat,cfo_sq_err,"
         "iterations,restarts,converged,status,wall_time";
}

std::string to_csv_row(const MetricRecord& r) {
  std::ostringstream os;
  os << r.point << ',' << r.trial << ',' << r.trial_seed << ',' << r.Nrx << ',' << r.Ntx << ','
     << r.L << ',' << r.Np << ',' << r.training << ',' << r.q << ',' << r.channel_model << ','
     << fmt(r.snr_db) << ',' << r.cfo_mode << ',' << fmt(r.cfo_value) << ',' << fmt(r.epsilon)
     << ',' << fmt(r.beta) << ',' << fmt(r.nmse) << ',' << fmt(r.nmse_db) << ','
     << fmt(r.gamma_re) << ',' << fmt(r.gamma_im) << ',' << fmt(r.eps_hat) << ','
     << fmt(r.cfo_sq_err) << ',' << r.iterations << ',' << r.restarts << ','
     << (r.converged ? 1 : 0) << ',' << r.status << ',' << fmt(r.wall_time);
  return os.str();
}

std::vector<MetricRecord> read_records_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::Io, "cannot open records " + path);
  std::string line;
  if (!std::getline(is, line) || line != records_csv_header())
    fail(ErrorCode::Parse, "records: unexpected header in " + path);
  std::vector<MetricRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 26) fail(ErrorCode::Parse, "records: bad row in " + path);
    try {
      MetricRecord r;
      r.point = std::stoi(f[0]);
      r.trial = std::stoi(f[1]);
      r.trial_seed = std::stoull(f[2]);
      r.Nrx = std::stoi(f[3]);
      r.Ntx = std::stoi(f[4]);
      r.L = std::stoi(f[5]);
      r.Np = std::stoi(f[6]);
      r.training = f[7];
      r.q = f[8];
      r.channel_model = f[9];
      r.snr_db = parse_double(f[10]);
      r.cfo_mode = f[11];
      r.cfo_value = parse_double(f[12]);
      r.epsilon = parse_double(f[13]);
      r.beta = parse_double(f[14]);
      r.nmse = parse_double(f[15]);
      r.nmse_db = parse_double(f[16]);
      r.gamma_re = parse_double(f[17]);
      r.gamma_im = parse_double(f[18]);
      r.eps_hat = parse_double(f[19]);
      r.cfo_sq_err = parse_double(f[20]);
      r.iterations = std::stoi(f[21]);
      r.restarts = std::stoi(f[22]);
      r.converged = f[23] == "1";
      r.status = f[24];
      r.wall_time = parse_double(f[25]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      fail(ErrorCode::Parse, "records: bad number in " + path);
    }
  }
  return out;
}

double median(std::vector<double> v) {
  require(!v.empty(), ErrorCode::DegenerateInput, "median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double trimmed_mean(std::vector<double> v, double trim_fraction) {
  require(!v.empty(), ErrorCode::DegenerateInput, "trimmed_mean: empty input");
  require(trim_fraction >= 0.0 && trim_fraction < 1.0, ErrorCode::InvalidArgument,
          "trimmed_mean: trim_fraction must lie in [0, 1)");
  std::sort(v.begin(), v.end());
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil((1.0 - trim_fraction) * v.size() - 1e-9)));
  double s = 0.0;
  for (std::size_t i = 0; i < keep; ++i) s += v[i];
  return s / static_cast<double>(keep);
}

std::vector<CdfRow> nse_cdf(const std::vector<MetricRecord>& records) {
  require(!records.empty(), ErrorCode::DegenerateInput, "nse_cdf: no records");
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(r.nmse);
  std::sort(v.begin(), v.end());
  std::vector<CdfRow> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double frac = static_cast<double>(i + 1) / v.size();
    if (!out.empty() && out.back().nse == v[i]) out.back().fraction = frac;
    else out.push_back({v[i], frac});
  }
  return out;
}

double success_fraction(const std::vector<MetricRecord>& records, double threshold) {
  require(!records.empty(), ErrorCode::DegenerateInput, "success_fraction: no records");
  const auto n = std::count_if(records.begin(), records.end(),
                               [&](const MetricRecord& r) { return r.nmse < threshold; });
  return static_cast<double>(n) / records.size();
}

PointSummary summarize(const std::vector<MetricRecord>& records, int point,
                       double success_threshold, double trim_fraction) {
  std::vector<MetricRecord> sel;
  for (const auto& r : records)
    if (r.point == point) sel.push_back(r);
  require(!sel.empty(), ErrorCode::DegenerateInput, "summarize: point has no records");
  PointSummary s;
  s.point = point;
  s.trials = static_cast<int>(sel.size());
  std::vector<double> lin, db, cfo;
  for (const auto& r : sel) {
    lin.push_back(r.nmse);
    db.push_back(r.nmse_db);
    cfo.push_back(r.cfo_sq_err);
    if (r.status == "diverged") ++s.diverged;
  }
  s.median_nmse_db = median(db);
  s.mean_nmse_db = to_db(trimmed_mean(lin, 0.0));
  s.trimmed_mean_nmse_db = to_db(trimmed_mean(lin, trim_fraction));
  s.cfo_mse = trimmed_mean(cfo, 0.0);
  s.success_fraction = success_fraction(sel, success_threshold);
  return s;
}

namespace {

json point_json(const ExperimentPoint& p, const PointSummary& s) {
  return {{"point", p.index},
          {"Np", p.cfg.Np},
          {"training", training::to_string(p.cfg.training)},
          {"q", quantizer_name(p.cfg.q)},
          {"snr_db", snr_to_json(p.snr_db)},
          {"cfo_mode", p.cfg.cfo.mode},
          {"cfo_value", p.cfo_value},
          {"epsilon", p.epsilon},
          {"beta", p.cfg.beta},
          {"norm_constant", p.norm_constant},
          {"config", config_json(p.cfg)},
          {"summary",
           {{"trials", s.trials},
            {"median_nmse_db", s.median_nmse_db},
            {"mean_nmse_db", s.mean_nmse_db},
            {"trimmed_mean_nmse_db", s.trimmed_mean_nmse_db},
            {"cfo_mse", s.cfo_mse},
            {"success_fraction", s.success_fraction},
            {"diverged", s.diverged}}}};
}

void write_artifacts(const std::string& out_dir, const ExperimentConfig& c, int point, int trial,
                     const TrialArtifacts& a) {
  const std::string stem = "p" + std::to_string(point) + "_t" + std::to_string(trial);
  if (c.write_traces) {
    const fs::path p = fs::path(out_dir) / "traces" / (stem + ".csv");
    std::ofstream os(p);
    if (!os) fail(ErrorCode::Io, "cannot write " + p.string());
    pbigamp::write_trace_csv(os, a.result.trace);
  }
  if (c.fixtures != "none" && trial == 0) {
    const std::string ext = "." + c.fixtures;
    const fs::path dir = fs::path(out_dir) / "fixtures";
    fixture_io::save_channel((dir / (stem + "_channel" + ext)).string(), a.C);
    fixture_io::save_training((dir / (stem + "_training" + ext)).string(), a.T);
    fixture_io::save_received((dir / (stem + "_received" + ext)).string(), a.Y);
  }
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, const std::vector<SweepSpec>& sweeps,
                          const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  RunSummary out;
  out.points = expand_points(cfg, sweeps);
  const int trials = cfg.trials;
  const std::size_t total = out.points.size() * static_cast<std::size_t>(trials);
  const bool writing = !opts.out_dir.empty();

  std::ofstream csv;
  if (writing) {
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (cfg.write_traces) fs::create_directories(fs::path(opts.out_dir) / "traces", ec);
    if (cfg.fixtures != "none") fs::create_directories(fs::path(opts.out_dir) / "fixtures", ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + opts.out_dir + ": " + ec.message());
    csv.open(fs::path(opts.out_dir) / "records.csv");
    if (!csv) fail(ErrorCode::Io, "cannot write records.csv in " + opts.out_dir);
    csv << records_csv_header() << '\n';
  }
  const bool need_artifacts = writing && (cfg.write_traces || cfg.fixtures != "none");

  std::vector<std::optional<MetricRecord>> slots(total);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;

  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= total) return;
      const auto& pt = out.points[k / trials];
      const int trial = static_cast<int>(k % trials);
      try {
        TrialArtifacts art;
        MetricRecord rec = run_trial(pt, trial, need_artifacts ? &art : nullptr);
        if (need_artifacts) write_artifacts(opts.out_dir, pt.cfg, pt.index, trial, art);
        std::lock_guard<std::mutex> lk(mu);
        slots[k] = std::move(rec);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!error) error = std::current_exception();
        next.store(total);
      }
      cv.notify_all();
    }
  };

  const int nworkers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(total)));
  std::vector<std::thread> pool;
  for (int w = 0; w < nworkers; ++w) pool.emplace_back(worker);

  for (std::size_t k = 0; k < total; ++k) {
    std::unique_lock<std::mutex> lk(mu);
    cv.wait(lk, [&] { return slots[k].has_value() || error; });
    if (error) break;
    MetricRecord rec = std::move(*slots[k]);
    slots[k].reset();
    lk.unlock();
    if (writing) {
      csv << to_csv_row(rec) << '\n';
      csv.flush();
      if (!csv) fail(ErrorCode::Io, "write failed for records.csv");
    }
    if (opts.on_record) opts.on_record(rec);
    if (rec.status == "diverged") out.any_diverged = true;
    out.records.push_back(std::move(rec));
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  json manifest;
  manifest["tool"] = "mmwsync";
  manifest["version"] = MMWSYNC_GIT_DESCRIBE;
  manifest["config"] = config_json(cfg);
  json sw = json::array();
  for (const auto& s : sweeps) sw.push_back({{"key", s.key}, {"values", s.values}});
  manifest["sweeps"] = sw;
  manifest["master_seed"] = cfg.seed;
  manifest["trial_seeds"] = json::array();
  for (int t = 0; t < trials; ++t) manifest["trial_seeds"].push_back(trial_seed(cfg.seed, t));
  json pts = json::array();
  for (const auto& p : out.points) {
    out.summaries.push_back(
        summarize(out.records, p.index, cfg.success_threshold, cfg.trim_fraction));
    pts.push_back(point_json(p, out.summaries.back()));
  }
  manifest["points"] = pts;
  manifest["any_diverged"] = out.any_diverged;
  manifest["wall_time"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (writing) {
    std::ofstream m(fs::path(opts.out_dir) / "manifest.json");
    if (!m) fail(ErrorCode::Io, "cannot write manifest.json in " + opts.out_dir);
    m << manifest.dump(2) << '\n';
    if (!m) fail(ErrorCode::Io, "write failed for manifest.json");
  }
  return out;
}

}  // namespace mmwsync::harness
