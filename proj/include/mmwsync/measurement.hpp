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
#include "mmwsync/training.hpp"
#include "mmwsync/types.hpp"

namespace mmwsync::measurement {

// Quantizer resolution: one bit per I/Q rail, or unquantized.
enum class Quantizer { OneBit, Full };

const char* to_string(Quantizer q);
Quantizer parse_quantizer(const std::string& s);

struct ReceivedBlock {
  cmat Y;  // Nrx x Np
  Quantizer q = Quantizer::Full;
  double sigma2 = 0.0;
};

/// Z = U_Nrx C F diag(U_Np^H b), evaluated with FFTs.
cmat forward_factored(const channel::AngleDelayChannel& C,
                      const training::EffectiveTraining& F, const cvec& b);

/// Z = sum_l H[l] T J_l diag(d).
cmat forward_tapwise(const channel::WidebandChannel& h,
                     const training::TrainingBlock& T, const cvec& d);

/// Element-wise sign of real and imaginary parts, with sign(0) = +1.
cmat quantize(const cmat& X, Quantizer q);

/// sigma^2 = ||T||_F^2 / (Np 10^(snr_db / 10)).
double snr_to_sigma2(const training::TrainingBlock& T, double snr_db);

/// Y = Q(Z + V) with V circular complex normal of per-entry variance sigma2.
ReceivedBlock observe(const cmat& Z, double sigma2, Quantizer q, Rng& rng);

}  // namespace mmwsync::measurement
