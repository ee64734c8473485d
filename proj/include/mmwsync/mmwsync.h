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

/* C interface to the mmwsync library. All functions report failures through
 * mmws_status; mmws_last_error() returns the message of the most recent
 * failure on the calling thread. Complex arrays are interleaved (re, im)
 * doubles in row-major order. */
#ifndef MMWSYNC_MMWSYNC_H
#define MMWSYNC_MMWSYNC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(MMWSYNC_BUILDING_LIBRARY)
#define MMWSYNC_API __declspec(dllexport)
#else
#define MMWSYNC_API __declspec(dllimport)
#endif
#else
#define MMWSYNC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mmws_status {
  MMWS_OK = 0,
  MMWS_ERR_INVALID_DIMENSION = 1,
  MMWS_ERR_INVALID_ARGUMENT = 2,
  MMWS_ERR_DIMENSION_MISMATCH = 3,
  MMWS_ERR_DEGENERATE_INPUT = 4,
  MMWS_ERR_ALIASING = 5,
  MMWS_ERR_DIVERGENCE = 6,
  MMWS_ERR_ESTIMATION_FAILED = 7,
  MMWS_ERR_SIZE_GUARD = 8,
  MMWS_ERR_RANK_DEFICIENT = 9,
  MMWS_ERR_NON_CONVERGENT = 10,
  MMWS_ERR_IO = 11,
  MMWS_ERR_PARSE = 12,
  MMWS_ERR_INTERNAL = 13
} mmws_status;

MMWSYNC_API const char* mmws_version(void);
MMWSYNC_API const char* mmws_status_string(mmws_status status);
MMWSYNC_API const char* mmws_last_error(void);

typedef void (*mmws_line_callback)(const char* line, void* user);

/* Experiments */
typedef struct mmws_experiment mmws_experiment;

MMWSYNC_API mmws_status mmws_experiment_load(const char* path, mmws_experiment** out);
MMWSYNC_API mmws_status mmws_experiment_from_json(const char* json, mmws_experiment** out);
MMWSYNC_API void mmws_experiment_destroy(mmws_experiment* exp);

MMWSYNC_API mmws_status mmws_experiment_set_seed(mmws_experiment* exp, uint64_t seed);
MMWSYNC_API mmws_status mmws_experiment_set_trials(mmws_experiment* exp, int trials);
MMWSYNC_API mmws_status mmws_experiment_set_workers(mmws_experiment* exp, int workers);
/* sweep is "key=v1,v2,..."; repeated calls form a Cartesian product. */
MMWSYNC_API mmws_status mmws_experiment_add_sweep(mmws_experiment* exp, const char* sweep);

/* Copies the effective configuration as JSON into buf (NUL-terminated).
 * *needed receives the required size including the terminator. */
MMWSYNC_API mmws_status mmws_experiment_config_json(const mmws_experiment* exp, char* buf,
                                                    size_t cap, size_t* needed);

/* Number of sweep points after expansion. */
MMWSYNC_API mmws_status mmws_experiment_num_points(const mmws_experiment* exp, int* points);

/* Runs all trials, writing records.csv and manifest.json into out_dir.
 * on_record (optional) receives each records.csv row in order. Returns
 * MMWS_ERR_DIVERGENCE when any trial diverged; every record is still written
 * and *diverged (optional) receives the count. */
MMWSYNC_API mmws_status mmws_experiment_run(mmws_experiment* exp, const char* out_dir,
                                            mmws_line_callback on_record, void* user,
                                            int* diverged);

/* Writes the per-figure CSVs for the records in in_dir. */
MMWSYNC_API mmws_status mmws_figures(const char* in_dir, const char* out_dir,
                                     mmws_line_callback on_file, void* user);

/* Runs the oracle suite; *failures receives the failed check count. */
MMWSYNC_API mmws_status mmws_selftest(uint64_t seed, mmws_line_callback on_line, void* user,
                                      int* failures);

/* Solver on caller-provided data */
typedef struct mmws_solver mmws_solver;

/* training: Ntx x Np complex, L: channel taps, nrx: receive antennas. */
MMWSYNC_API mmws_status mmws_solver_create(int nrx, int ntx, int np, int L,
                                           const double* training, mmws_solver** out);
MMWSYNC_API void mmws_solver_destroy(mmws_solver* solver);

MMWSYNC_API mmws_status mmws_solver_set_hyperparams(mmws_solver* solver, double lambda_b,
                                                    double lambda_c, double sigma_b2,
                                                    double sigma_c2);
MMWSYNC_API mmws_status mmws_solver_set_options(mmws_solver* solver, int t_max, double tau_stop,
                                                double damping, int em_outer_iters,
                                                int restarts, uint64_t init_seed);

/* y: Nrx x Np complex. one_bit: nonzero for sign data. sigma2: noise
 * variance. b_out: Np complex. c_out: Nrx x (Ntx L) complex. */
MMWSYNC_API mmws_status mmws_solver_run(mmws_solver* solver, const double* y, int one_bit,
                                        double sigma2, double* b_out, double* c_out,
                                        int* iterations);

/* Trace of the last run as CSV text, same sizing rules as
 * mmws_experiment_config_json. */
MMWSYNC_API mmws_status mmws_solver_trace_csv(const mmws_solver* solver, char* buf, size_t cap,
                                              size_t* needed);

/* CFO estimate from the phase-error spectrum b (Np complex). */
MMWSYNC_API mmws_status mmws_cfo_estimate(const double* b, int np, double beta,
                                          double sigma2_eff, double* eps_out);

#ifdef __cplusplus
}
#endif

#endif
