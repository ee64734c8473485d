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

#include "mmwsync/phase.hpp"

#include <cmath>

#include "mmwsync/errors.hpp"
#include "mmwsync/kernels.hpp"

namespace mmwsync::phase {

void PhaseParams::validate() const {
  require(Np >= 1, ErrorCode::InvalidDimension, "phase: Np must be >= 1");
  require(std::abs(epsilon) < kPi, ErrorCode::Aliasing, "phase: |epsilon| must be < pi");
  require(beta >= 0.0, ErrorCode::InvalidArgument, "phase: beta must be >= 0");
}

cvec gen_phase_errors(const PhaseParams& p, Rng& rng) {
  p.validate();
  cvec d(p.Np);
  std::normal_distribution<double> step(0.0, 1.0);
  double walk = 0.0;
  for (int n = 1; n <= p.Np; ++n) {
    if (p.beta > 0.0) walk += p.beta * step(rng);
    d[n - 1] = std::polar(1.0, p.epsilon * n + walk);
  }
  return d;
}

cvec to_spectrum(const cvec& d) { return kernels::dft(d, kernels::Direction::Forward); }

cvec from_spectrum(const cvec& b) { return kernels::dft(b, kernels::Direction::Inverse); }

double ppm_to_digital(double ppm, double f1, double T) {
  const double eps = 2.0 * kPi * (ppm * 1e-6 * f1) * T;
  require(std::abs(eps) < kPi, ErrorCode::Aliasing,
          "ppm_to_digital: offset aliases beyond +-pi per sample");
  return eps;
}

}  // namespace mmwsync::phase
