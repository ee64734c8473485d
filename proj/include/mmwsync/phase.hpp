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

#include "mmwsync/types.hpp"

namespace mmwsync::phase {

struct PhaseParams {
  double epsilon = 0.0;  // digital CFO, radians per sample
  double beta = 0.0;     // Wiener increment standard deviation, radians
  int Np = 1;

  void validate() const;
};

/// d_n = exp(j (epsilon n + phi_n)), n = 1..Np, with phi_0 = 0 and
/// Gaussian increments of variance beta^2.
cvec gen_phase_errors(const PhaseParams& p, Rng& rng);

/// b = U_Np d.
cvec to_spectrum(const cvec& d);

/// d = U_Np^H b.
cvec from_spectrum(const cvec& b);

/// epsilon = 2 pi (ppm 1e-6 f1) T. Throws Aliasing when |epsilon| >= pi.
double ppm_to_digital(double ppm, double f1, double T);

}  // namespace mmwsync::phase
