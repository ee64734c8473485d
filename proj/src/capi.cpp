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

#include "mmwsync/mmwsync.h"

#include <algorithm>
#include <exception>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mmwsync/errors.hpp"
#include "mmwsync/estimators.hpp"
#include "mmwsync/figures.hpp"
#include "mmwsync/harness.hpp"
#include "mmwsync/pbigamp.hpp"
#include "mmwsync/selftest.hpp"
#include "mmwsync/training.hpp"

#ifndef MMWSYNC_GIT_DESCRIBE
#define MMWSYNC_GIT_DESCRIBE "unknown"
#endif

using namespace mmwsync;

struct mmws_experiment {
  harness::ExperimentConfig cfg;
  std::vector<harness::SweepSpec> sweeps;
};

struct mmws_solver {
  int nrx = 0;
  training::TrainingBlock T;
  training::EffectiveTraining F;
  std::optional<pbigamp::Hyperparams> hp;
  pbigamp::GampConfig cfg;
  std::vector<pbigamp::TraceRow> trace;
};

namespace {

thread_local std::string g_last_error;

mmws_status to_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidDimension: return MMWS_ERR_INVALID_DIMENSION;
    case ErrorCode::InvalidArgument: return MMWS_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return MMWS_ERR_DIMENSION_MISMATCH;
    case ErrorCode::DegenerateInput: return MMWS_ERR_DEGENERATE_INPUT;
    case ErrorCode::Aliasing: return MMWS_ERR_ALIASING;
    case ErrorCode::Divergence: return MMWS_ERR_DIVERGENCE;
    case ErrorCode::EstimationFailed: return MMWS_ERR_ESTIMATION_FAILED;
    case ErrorCode::SizeGuard: return MMWS_ERR_SIZE_GUARD;
    case ErrorCode::RankDeficient: return MMWS_ERR_RANK_DEFICIENT;
    case ErrorCode::NonConvergent: return MMWS_ERR_NON_CONVERGENT;
    case ErrorCode::Io: return MMWS_ERR_IO;
    case ErrorCode::Parse: return MMWS_ERR_PARSE;
  }
  return MMWS_ERR_INTERNAL;
}

template <typename Fn>
mmws_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MMWS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MMWS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return MMWS_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

cmat read_complex(const double* src, int rows, int cols) {
  cmat M(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const size_t k = 2 * (static_cast<size_t>(r) * cols + c);
      M(r, c) = {src[k], src[k + 1]};
    }
  return M;
}

void write_complex(const cmat& M, double* dst) {
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      const size_t k = 2 * (static_cast<size_t>(r) * M.cols() + c);
      dst[k] = M(r, c).real();
      dst[k + 1] = M(r, c).imag();
    }
}

mmws_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf) return MMWS_OK;
  if (cap < s.size() + 1) fail(ErrorCode::InvalidArgument, "buffer too small");
  std::copy(s.begin(), s.end(), buf);
  buf[s.size()] = '\0';
  return MMWS_OK;
}

}  // namespace

extern "C" {

const char* mmws_version(void) { return MMWSYNC_GIT_DESCRIBE; }

const char* mmws_status_string(mmws_status status) {
  switch (status) {
    case MMWS_OK: return "ok";
    case MMWS_ERR_INVALID_DIMENSION: return "invalid dimension";
    case MMWS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MMWS_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case MMWS_ERR_DEGENERATE_INPUT: return "degenerate input";
    case MMWS_ERR_ALIASING: return "aliasing";
    case MMWS_ERR_DIVERGENCE: return "divergence";
    case MMWS_ERR_ESTIMATION_FAILED: return "estimation failed";
    case MMWS_ERR_SIZE_GUARD: return "size guard";
    case MMWS_ERR_RANK_DEFICIENT: return "rank deficient";
    case MMWS_ERR_NON_CONVERGENT: return "non-convergent";
    case MMWS_ERR_IO: return "i/o error";
    case MMWS_ERR_PARSE: return "parse error";
    case MMWS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mmws_last_error(void) { return g_last_error.c_str(); }

mmws_status mmws_experiment_load(const char* path, mmws_experiment** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto* e = new mmws_experiment{harness::load_config(path), {}};
    *out = e;
    return MMWS_OK;
  });
}

mmws_status mmws_experiment_from_json(const char* json, mmws_experiment** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = nullptr;
    *out = new mmws_experiment{harness::config_from_json(json), {}};
    return MMWS_OK;
  });
}

void mmws_experiment_destroy(mmws_experiment* exp) { delete exp; }

mmws_status mmws_experiment_set_seed(mmws_experiment* exp, uint64_t seed) {
  return guarded([&] {
    need(exp, "experiment");
    exp->cfg.seed = seed;
    return MMWS_OK;
  });
}

mmws_status mmws_experiment_set_trials(mmws_experiment* exp, int trials) {
  return guarded([&] {
    need(exp, "experiment");
    require(trials >= 1, ErrorCode::InvalidArgument, "trials must be >= 1");
    exp->cfg.trials = trials;
    return MMWS_OK;
  });
}

mmws_status mmws_experiment_set_workers(mmws_experiment* exp, int workers) {
  return guarded([&] {
    need(exp, "experiment");
    require(workers >= 1, ErrorCode::InvalidArgument, "workers must be >= 1");
    exp->cfg.workers = workers;
    return MMWS_OK;
  });
}

mmws_status mmws_experiment_add_sweep(mmws_experiment* exp, const char* sweep) {
  return guarded([&] {
    need(exp, "experiment");
    need(sweep, "sweep");
    auto s = harness::parse_sweep(sweep);
    auto trial = exp->sweeps;
    trial.push_back(s);
    harness::expand_points(exp->cfg, trial);
    exp->sweeps = std::move(trial);
    return MMWS_OK;
  });
}

mmws_status mmws_experiment_config_json(const mmws_experiment* exp, char* buf, size_t cap,
                                        size_t* needed) {
  return guarded([&] {
    need(exp, "experiment");
    return copy_out(harness::config_to_json(exp->cfg), buf, cap, needed);
  });
}

mmws_status mmws_experiment_num_points(const mmws_experiment* exp, int* points) {
  return guarded([&] {
    need(exp, "experiment");
    need(points, "points");
    *points = static_cast<int>(harness::expand_points(exp->cfg, exp->sweeps).size());
    return MMWS_OK;
  });
}

mmws_status mmws_experiment_run(mmws_experiment* exp, const char* out_dir,
                                mmws_line_callback on_record, void* user, int* diverged) {
  return guarded([&] {
    need(exp, "experiment");
    need(out_dir, "out_dir");
    harness::RunOptions opts;
    opts.out_dir = out_dir;
    if (on_record)
      opts.on_record = [&](const harness::MetricRecord& r) {
        on_record(harness::to_csv_row(r).c_str(), user);
      };
    const auto summary = harness::run_experiment(exp->cfg, exp->sweeps, opts);
    int n = 0;
    for (const auto& r : summary.records) n += r.status == "diverged";
    if (diverged) *diverged = n;
    if (n > 0) {
      g_last_error = std::to_string(n) + " trial(s) diverged";
      return MMWS_ERR_DIVERGENCE;
    }
    return MMWS_OK;
  });
}

mmws_status mmws_figures(const char* in_dir, const char* out_dir, mmws_line_callback on_file,
                         void* user) {
  return guarded([&] {
    need(in_dir, "in_dir");
    need(out_dir, "out_dir");
    for (const auto& f : figures::write_figures(in_dir, out_dir))
      if (on_file) on_file(f.c_str(), user);
    return MMWS_OK;
  });
}

mmws_status mmws_selftest(uint64_t seed, mmws_line_callback on_line, void* user, int* failures) {
  return guarded([&] {
    const int n = selftest::run(seed, [&](const std::string& line) {
      if (on_line) on_line(line.c_str(), user);
    });
    if (failures) *failures = n;
    return MMWS_OK;
  });
}

mmws_status mmws_solver_create(int nrx, int ntx, int np, int L, const double* training,
                               mmws_solver** out) {
  return guarded([&] {
    need(training, "training");
    need(out, "out");
    *out = nullptr;
    require(nrx > 0 && ntx > 0 && np > 0 && L > 0, ErrorCode::InvalidDimension,
            "dimensions must be positive");
    auto s = std::make_unique<mmws_solver>();
    s->nrx = nrx;
    s->T.T = read_complex(training, ntx, np);
    s->T.P = s->T.T.squaredNorm() / np;
    s->F = training::assemble_F(s->T, L);
    *out = s.release();
    return MMWS_OK;
  });
}

void mmws_solver_destroy(mmws_solver* solver) { delete solver; }

mmws_status mmws_solver_set_hyperparams(mmws_solver* solver, double lambda_b, double lambda_c,
                                        double sigma_b2, double sigma_c2) {
  return guarded([&] {
    need(solver, "solver");
    pbigamp::Hyperparams hp{lambda_b, lambda_c, sigma_b2, sigma_c2, 0.0};
    hp.validate();
    solver->hp = hp;
    return MMWS_OK;
  });
}

mmws_status mmws_solver_set_options(mmws_solver* solver, int t_max, double tau_stop,
                                    double damping, int em_outer_iters, int restarts,
                                    uint64_t init_seed) {
  return guarded([&] {
    need(solver, "solver");
    pbigamp::GampConfig c = solver->cfg;
    c.t_max = t_max;
    c.tau_stop = tau_stop;
    c.damping = damping;
    c.em_outer_iters = em_outer_iters;
    c.restarts = restarts;
    c.init_seed = init_seed;
    c.validate();
    solver->cfg = c;
    return MMWS_OK;
  });
}

mmws_status mmws_solver_run(mmws_solver* solver, const double* y, int one_bit, double sigma2,
                            double* b_out, double* c_out, int* iterations) {
  return guarded([&] {
    need(solver, "solver");
    need(y, "y");
    const int np = solver->F.Np();
    measurement::ReceivedBlock Y;
    Y.Y = read_complex(y, solver->nrx, np);
    Y.q = one_bit ? measurement::Quantizer::OneBit : measurement::Quantizer::Full;
    Y.sigma2 = sigma2;
    const Dims dims{solver->nrx, solver->F.Ntx, solver->F.L, np};
    pbigamp::Hyperparams hp = solver->hp.value_or(pbigamp::Hyperparams::defaults(dims, sigma2));
    hp.sigma2 = sigma2;
    auto res = pbigamp::run(Y, solver->F, hp, solver->cfg);
    solver->trace = res.trace;
    if (b_out) write_complex(cmat(res.b_hat.transpose()), b_out);
    if (c_out) write_complex(res.C_hat, c_out);
    if (iterations) *iterations = res.iterations;
    return MMWS_OK;
  });
}

mmws_status mmws_solver_trace_csv(const mmws_solver* solver, char* buf, size_t cap,
                                  size_t* needed) {
  return guarded([&] {
    need(solver, "solver");
    std::ostringstream os;
    pbigamp::write_trace_csv(os, solver->trace);
    return copy_out(os.str(), buf, cap, needed);
  });
}

mmws_status mmws_cfo_estimate(const double* b, int np, double beta, double sigma2_eff,
                              double* eps_out) {
  return guarded([&] {
    need(b, "b");
    need(eps_out, "eps_out");
    require(np >= 2, ErrorCode::InvalidDimension, "np must be >= 2");
    const cvec bv = read_complex(b, np, 1);
    *eps_out = estimators::cfo_estimate(bv, beta, sigma2_eff);
    return MMWS_OK;
  });
}

}  // extern "C"
