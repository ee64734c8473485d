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

#include <vector>

#include "mmwsync/types.hpp"

namespace mmwsync::channel {

struct Ray {
  cplx gain;
  double delay;  // seconds
  double aoa;    // radians
  double aod;    // radians
};

struct RaySet {
  std::vector<std::vector<Ray>> clusters;

  std::size_t num_rays() const;
};

struct ChannelGenParams {
  int N_cs = 4;
  int rays_per_cluster = 10;
  double angle_spread = 15.0 * kPi / 180.0;  // Laplacian standard deviation
  double delay_spread_max = 0.0;             // seconds; <= 0 means (L-1) T
  int Nrx = 8;
  int Ntx = 8;
  int L = 4;
  double T = 10e-9;

  void validate() const;
};

struct WidebandChannel {
  std::vector<cmat> taps;  // L taps, each Nrx x Ntx
  double T = 10e-9;

  int L() const { return static_cast<int>(taps.size()); }
  int Nrx() const { return taps.empty() ? 0 : static_cast<int>(taps[0].rows()); }
  int Ntx() const { return taps.empty() ? 0 : static_cast<int>(taps[0].cols()); }
};

// C = [C[0] C[1] ... C[L-1]], Nrx x (Ntx L).
struct AngleDelayChannel {
  cmat C;
  int Ntx = 0;
  int L = 0;

  int Nrx() const { return static_cast<int>(C.rows()); }
  auto block(int ell) const { return C.middleCols(ell * Ntx, Ntx); }
};

RaySet sample_rays(const ChannelGenParams& params, Rng& rng);

/// H[l] = sum gain * a_Nrx(pi sin aoa) a_Ntx(pi sin aod)^H sinc(l - tau / T).
WidebandChannel synthesize_taps(const RaySet& rays, const ChannelGenParams& params);

AngleDelayChannel to_angle_delay(const WidebandChannel& h);
WidebandChannel from_angle_delay(const AngleDelayChannel& c, double T = 10e-9);

/// Scale s with mean ||s C||_F^2 = Nrx Ntx over the ensemble.
double normalization_constant(const std::vector<AngleDelayChannel>& ensemble);

/// Draws `ensemble_size` clustered channels from a dedicated seed and
/// returns their normalization constant.
double calibrate_normalization(const ChannelGenParams& params, int ensemble_size,
                               std::uint64_t seed);

/// Angle for which pi sin(theta) equals the DFT grid frequency 2 pi k / N.
double grid_angle(int k, int N);

/// Angle-delay channel with exactly `nonzeros` active entries at distinct
/// random positions, gains CN(0, Nrx Ntx / nonzeros).
AngleDelayChannel sample_exact_sparse(int Nrx, int Ntx, int L, int nonzeros, Rng& rng);

}  // namespace mmwsync::channel
