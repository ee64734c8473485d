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

#include <string>
#include <vector>

#include "mmwsync/channel.hpp"
#include "mmwsync/measurement.hpp"
#include "mmwsync/moments.hpp"
#include "mmwsync/pbigamp.hpp"
#include "mmwsync/training.hpp"

// Slow reference implementations used only by tests and selftest.
namespace mmwsync::oracle {

// z_m^(i,k) = G_{m,i} A_{m,k}, G = U_Np^H (x) 1_Nrx, A = F^T (x) U_Nrx.
// Stored densely, index ((m * Nb) + i) * Nc + k.
struct Tensor {
  int M = 0;
  int Nb = 0;
  int Nc = 0;
  std::vector<cplx> data;

  cplx operator()(int m, int i, int k) const {
    return data[(static_cast<size_t>(m) * Nb + i) * Nc + k];
  }
};

inline constexpr double kTensorLimit = 1e6;

/// Throws Error(SizeGuard) above kTensorLimit elements.
Tensor build_tensor(int Nrx, const training::EffectiveTraining& F);

// Every R-step output in vec() layout.
struct GenericStep {
  cvec z_bar;
  rvec nu_p_bar;
  rvec nu_p;
  cvec p_hat;
  cvec z_hat;
  rvec nu_z;
  cvec s_hat;
  rvec nu_s;
  cvec r_hat;
  rvec nu_r;
  cvec q_hat;
  rvec nu_q;
  cvec c_next;
  rvec nu_c_next;
  cvec b_next;
  rvec nu_b_next;
};

/// One undamped iteration by direct summation over the tensor.
GenericStep generic_pbigamp_step(const pbigamp::GampState& st, const Tensor& z, const cmat& Y,
                                 const pbigamp::Hyperparams& hp, measurement::Quantizer q,
                                 double floor = 1e-12);

/// Random state with strictly positive variances and a nonzero s_hat, for
/// equivalence checks.
pbigamp::GampState random_state(const Dims& dims, Rng& rng);

// Largest relative error ||fast - generic|| / ||generic|| over all R-step
// outputs, with the name of the worst one.
struct StepDiscrepancy {
  double max_rel = 0.0;
  std::string worst;
};

StepDiscrepancy compare_steps(const pbigamp::StepResult& fast, const GenericStep& generic);

struct GridLsResult {
  double eps_hat = 0.0;
  channel::WidebandChannel h_hat;
  double residual = 0.0;  // ||Y - model||_F / ||Y||_F at eps_hat
  std::vector<double> residuals;  // one per grid point
};

/// Exhaustive CFO grid with least squares for the taps (beta = 0 assumed).
GridLsResult grid_ls_estimate(const measurement::ReceivedBlock& Y, const training::TrainingBlock& T,
                              int L, const std::vector<double>& grid);

struct PropagationCheck {
  double residual = 0.0;
  cmat C_eps;
  int nnz_before = 0;
  int nnz_after = 0;
};

/// Z(C, eps) against Z(C(eps), 0) with eps = 2 pi d / Np, L = 1 and circulant T.
PropagationCheck cfo_propagation_check(const training::TrainingBlock& T, const cmat& C, int d);

/// Number of entries with magnitude above rel_tol times the largest one.
int support_size(const cmat& C, double rel_tol = 1e-9);

/// Posterior moments of z by adaptive quadrature, one real rail at a time.
pbigamp::Moments quadrature_output_moments(cplx y, cplx p_hat, double nu_p, double sigma2,
                                           measurement::Quantizer q);

/// Bernoulli-Gaussian posterior (mean, var, pi) by adaptive quadrature.
pbigamp::InputMoments quadrature_input_moments_bg(cplx r_hat, double nu_r, double lambda,
                                                  double sigma_x2);

}  // namespace mmwsync::oracle
