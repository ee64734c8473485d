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

#include "mmwsync/measurement.hpp"
#include "mmwsync/types.hpp"

namespace mmwsync::pbigamp {

// Posterior mean and total complex variance E|x - mean|^2.
struct Moments {
  cplx mean;
  double var = 0.0;
};

// Bernoulli-Gaussian posterior: activity probability plus the moments of the
// active component, which the EM update consumes.
struct InputMoments {
  cplx mean;
  double var = 0.0;
  double pi = 0.0;
  cplx active_mean;
  double active_var = 0.0;
};

/// Posterior of z ~ CN(p_hat, nu_p) given y. For the one-bit quantizer each
/// rail is a probit observation through noise of variance sigma2 / 2; for the
/// full-resolution quantizer y = z + CN(0, sigma2).
Moments output_moments(cplx y, cplx p_hat, double nu_p, double sigma2,
                       measurement::Quantizer q);

/// Posterior of x with prior lambda delta(x) + (1 - lambda) CN(0, sigma_x2)
/// given the pseudo-measurement r_hat = x + CN(0, nu_r).
InputMoments input_moments_bg(cplx r_hat, double nu_r, double lambda, double sigma_x2);

}  // namespace mmwsync::pbigamp
