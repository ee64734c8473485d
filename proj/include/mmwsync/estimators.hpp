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

#include "mmwsync/channel.hpp"
#include "mmwsync/types.hpp"

namespace mmwsync::estimators {

/// Antenna-domain taps from the matrixized angle-delay estimate.
channel::WidebandChannel reconstruct_taps(const cmat& C_hat, int Ntx, int L, double T = 10e-9);

/// Same, from vec(C_hat) of length Nrx Ntx L.
channel::WidebandChannel reconstruct_taps(const cvec& c_hat, const Dims& dims, double T = 10e-9);

// Two-state (phase, frequency) extended Kalman filter.
struct EkfState {
  double theta = 0.0;
  double eps = 0.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
  double q_theta = 0.0;  // beta^2
  double q_eps = 1e-10;  // frequency drift variance
  double r = 1e-6;       // per-rail measurement noise of the normalized samples

  void predict();
  /// Linearized I/Q update with the unit-modulus sample u.
  void update(cplx u);
};

/// Scalar CFO estimate from the phase-error spectrum b_hat.
/// sigma2_eff is the measurement noise variance of the amplitude-normalized
/// time samples; a value <= 0 estimates it from the amplitude spread of the
/// samples. Throws Error(EstimationFailed) when the samples are all near zero.
double cfo_estimate(const cvec& b_hat, double beta, double sigma2_eff);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double x);

}  // namespace mmwsync::estimators
