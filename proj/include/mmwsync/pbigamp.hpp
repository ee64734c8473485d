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
#include <iosfwd>
#include <vector>

#include "mmwsync/measurement.hpp"
#include "mmwsync/moments.hpp"
#include "mmwsync/training.hpp"
#include "mmwsync/types.hpp"

// Vector-variance parametric bilinear GAMP for z = diag(G b) A c with
// G = U_Np^H (x) 1_Nrx and A = F^T (x) U_Nrx. No tensor is ever formed: every
// step is evaluated on the Nrx x Np, (Ntx L) x Np and length-Np factors.
namespace mmwsync::pbigamp {

// lambda_* is the probability that an entry is zero.
struct Hyperparams {
  double lambda_b = 0.99;
  double lambda_c = 0.95;
  double sigma_b2 = 100.0;
  double sigma_c2 = 1.0;
  double sigma2 = 1.0;

  void validate() const;

  /// Priors matched to E||b||^2 = Np and E||C||_F^2 = Nrx Ntx.
  static Hyperparams defaults(const Dims& dims, double sigma2);
};

struct GampConfig {
  int t_max = 200;
  double tau_stop = 1e-7;
  double damping = 0.3;
  int em_outer_iters = 10;
  int restarts = 7;
  // Restart while the spread of |U^H b_hat| exceeds this; the attempt with the
  // smallest spread is returned.
  double modulus_spread_max = 0.05;
  std::uint64_t init_seed = 1;
  double variance_floor = 1e-12;
  bool learn_hyperparams = true;

  void validate() const;
};

class Operator {
 public:
  Operator(int Nrx, const training::EffectiveTraining& F);

  const Dims& dims() const { return dims_; }
  const cmat& F() const { return F_; }
  const rmat& F_abs2() const { return F_abs2_; }

 private:
  Dims dims_;
  cmat F_;
  rmat F_abs2_;
};

// Iteration state. Matrix-shaped members use the vec() layout:
// C-shaped ones are Nrx x (Ntx L), z-shaped ones are Nrx x Np.
struct GampState {
  cvec b_hat;
  rvec nu_b;
  cmat C_hat;
  rmat nu_c;

  cmat p_hat;
  rmat nu_p;
  rmat nu_p_bar;
  cmat z_bar;  // z^(*,*) of the current iterate
  cmat z_hat;
  rmat nu_z;
  cmat s_hat;
  rmat nu_s;
  cmat r_hat;
  rmat nu_r;
  cvec q_hat;
  rvec nu_q;

  // Activity posteriors from the last input step, consumed by EM.
  rvec pi_b;
  cvec active_mean_b;
  rvec active_var_b;
  rmat pi_c;
  cmat active_mean_c;
  rmat active_var_c;

  int t = 0;

  /// b_hat = U_Np 1 (zero CFO), C_hat drawn from the active-prior scale.
  static GampState initialize(const Dims& dims, const Hyperparams& hp, Rng& rng);
};

struct PStage {
  cmat X;         // U_Nrx C_hat F
  cvec d_hat;     // U_Np^H b_hat
  cmat z_bar;     // X diag(d_hat)
  rmat nu_p_bar;
  rmat nu_p;
  cmat p_hat;
};

struct RQStage {
  cmat r_hat;
  rmat nu_r;
  cvec q_hat;
  rvec nu_q;
};

/// Output-side products. Reads C_hat, nu_c, b_hat, nu_b and the previous s_hat.
PStage compute_p_stage(const Operator& op, const GampState& st);

/// Pseudo-measurements of C and b. Reads the current s_hat / nu_s plus C_hat, b_hat and their
/// variances; X and d_hat come from the p stage of the same iteration.
RQStage compute_rq_stage(const Operator& op, const GampState& st, const PStage& p,
                         double floor = 1e-12);

// One undamped sweep, exposed for equivalence tests against the
// literal tensor implementation.
struct StepResult {
  PStage p;
  cmat z_hat;
  rmat nu_z;
  cmat s_hat;
  rmat nu_s;
  RQStage rq;
  cmat C_next;
  rmat nu_c_next;
  cvec b_next;
  rvec nu_b_next;
};

StepResult fast_step(const Operator& op, const GampState& st, const cmat& Y,
                     const Hyperparams& hp, measurement::Quantizer q, double floor = 1e-12);

/// EM re-estimation of (lambda, sigma_x2) for b and c; sigma2 is kept.
Hyperparams em_update(const GampState& st, const Hyperparams& hp);

struct TraceRow {
  int iteration = 0;
  int em_iteration = 0;
  double residual = 0.0;
  double damping = 0.0;
  double lambda_b = 0.0;
  double lambda_c = 0.0;
  double sigma_b2 = 0.0;
  double sigma_c2 = 0.0;
};

struct RunResult {
  cvec b_hat;
  cmat C_hat;
  Hyperparams hp;
  std::vector<TraceRow> trace;
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
};

/// Full solver: GAMP iterations with damping, residual-based stopping, an EM outer loop
/// warm-starting each inner run, and restarts on non-finite state or on a
/// phase estimate far from unit modulus. Throws Error(Divergence) when no
/// attempt finishes.
RunResult run(const measurement::ReceivedBlock& Y, const training::EffectiveTraining& F,
              const Hyperparams& hp, const GampConfig& cfg);

/// Mean of (|d_n| / mean|d| - 1)^2 over d = U^H b_hat.
double modulus_spread(const cvec& b_hat);

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace);

}  // namespace mmwsync::pbigamp
