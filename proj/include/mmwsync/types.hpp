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

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace mmwsync {

using cplx = std::complex<double>;
using cvec = Eigen::VectorXcd;
using rvec = Eigen::VectorXd;
using cmat = Eigen::MatrixXcd;
using rmat = Eigen::MatrixXd;

// All stochastic generators take one of these explicitly; there is no
// process-wide stream.
using Rng = std::mt19937_64;

inline constexpr double kPi = std::numbers::pi;

// Problem dimensions shared by every module. Matrices follow the
// column-major vec() convention, so vec(C)[k] with k = col * Nrx + row.
struct Dims {
  int Nrx = 0;
  int Ntx = 0;
  int L = 0;
  int Np = 0;

  int num_b() const { return Np; }
  int num_c() const { return Nrx * Ntx * L; }
  int num_z() const { return Nrx * Np; }
  bool valid() const { return Nrx > 0 && Ntx > 0 && L > 0 && Np > 0; }
  bool operator==(const Dims&) const = default;
};

// Standard circularly-symmetric complex normal draw with E|x|^2 = var.
inline cplx complex_normal(Rng& rng, double var = 1.0) {
  std::normal_distribution<double> n(0.0, std::sqrt(var / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

}  // namespace mmwsync
