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

#include "mmwsync/types.hpp"

namespace mmwsync::training {

enum class TrainingKind { IID_QPSK, IID_GAUSSIAN, SHIFTED_ZC };

const char* to_string(TrainingKind kind);
TrainingKind parse_training_kind(const std::string& name);

// T is Ntx x Np; column n is the transmit symbol t[n]. P is the per-symbol
// energy E[t^H t], so entries carry power P / Ntx.
struct TrainingBlock {
  cmat T;
  double P = 1.0;

  int Ntx() const { return static_cast<int>(T.rows()); }
  int Np() const { return static_cast<int>(T.cols()); }
};

// F = [U^H T J_0; U^H T J_1; ...; U^H T J_{L-1}], (Ntx L) x Np.
struct EffectiveTraining {
  cmat F;
  int Ntx = 0;
  int L = 0;

  int Np() const { return static_cast<int>(F.cols()); }
};

/// Zadoff-Chu sequence of length Np; root must be coprime to Np.
cvec zc_sequence(int Np, int root);

/// For SHIFTED_ZC row i is the root-1 sequence delayed by i floor(Np / Ntx),
/// so T is circulant when Np == Ntx.
TrainingBlock gen_training(TrainingKind kind, int Ntx, int Np, double P, Rng& rng);

EffectiveTraining assemble_F(const TrainingBlock& T, int L);

}  // namespace mmwsync::training
