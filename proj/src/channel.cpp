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

#include "mmwsync/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmwsync/errors.hpp"
#include "mmwsync/kernels.hpp"

namespace mmwsync::channel {

using kernels::Direction;

std::size_t RaySet::num_rays() const {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.size();
  return n;
}

void ChannelGenParams::validate() const {
  require(N_cs > 0 && rays_per_cluster > 0, ErrorCode::InvalidArgument,
          "channel params: cluster and ray counts must be positive");
  require(Nrx > 0 && Ntx > 0 && L > 0, ErrorCode::InvalidDimension,
          "channel params: array sizes and tap count must be positive");
  require(T > 0.0 && angle_spread >= 0.0, ErrorCode::InvalidArgument,
          "channel params: T must be positive, angle spread non-negative");
}

namespace {

double laplacian(Rng& rng, double scale) {
  if (scale == 0.0) return 0.0;
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double v = u(rng);
  const double sgn = v < 0.0 ? -1.0 : 1.0;
  return -scale * sgn * std::log1p(-2.0 * std::abs(v));
}

}  // namespace

RaySet sample_rays(const ChannelGenParams& params, Rng& rng) {
  params.validate();
  const double window = (params.L - 1) * params.T;
  const double spread_max =
      params.delay_spread_max > 0.0 ? params.delay_spread_max : window;
  const double lap_scale = params.angle_spread / std::sqrt(2.0);

  std::uniform_real_distribution<double> center_angle(-kPi / 2.0, kPi / 2.0);
  std::uniform_real_distribution<double> center_delay(0.0, spread_max);
  std::uniform_real_distribution<double> jitter(0.0, 2.0 * params.T);

  RaySet rays;
  rays.clusters.resize(static_cast<size_t>(params.N_cs));
  for (auto& cluster : rays.clusters) {
    const double aoa0 = center_angle(rng);
    const double aod0 = center_angle(rng);
    const double tau0 = center_delay(rng);
    cluster.reserve(static_cast<size_t>(params.rays_per_cluster));
    for (int m = 0; m < params.rays_per_cluster; ++m) {
      Ray ray;
      ray.aoa = aoa0 + laplacian(rng, lap_scale);
      ray.aod = aod0 + laplacian(rng, lap_scale);
      ray.delay = std::clamp(tau0 + jitter(rng), 0.0, window);
      ray.gain = complex_normal(rng);
      cluster.push_back(ray);
    }
  }
  return rays;
}

WidebandChannel synthesize_taps(const RaySet& rays, const ChannelGenParams& params) {
  params.validate();
  WidebandChannel h;
  h.T = params.T;
  h.taps.assign(static_cast<size_t>(params.L), cmat::Zero(params.Nrx, params.Ntx));
  for (const auto& cluster : rays.clusters) {
    for (const auto& ray : cluster) {
      const cvec ar = kernels::vandermonde(params.Nrx, kPi * std::sin(ray.aoa));
      const cvec at = kernels::vandermonde(params.Ntx, kPi * std::sin(ray.aod));
      const cmat outer = ray.gain * ar * at.adjoint();
      for (int ell = 0; ell < params.L; ++ell) {
        const double w = kernels::sinc(ell - ray.delay / params.T);
        if (w != 0.0) h.taps[static_cast<size_t>(ell)] += w * outer;
      }
    }
  }
  return h;
}

AngleDelayChannel to_angle_delay(const WidebandChannel& h) {
  require(!h.taps.empty(), ErrorCode::InvalidDimension, "to_angle_delay: no taps");
  const int nrx = h.Nrx();
  const int ntx = h.Ntx();
  AngleDelayChannel c;
  c.Ntx = ntx;
  c.L = h.L();
  c.C.resize(nrx, static_cast<Eigen::Index>(ntx) * c.L);
  for (int ell = 0; ell < c.L; ++ell) {
    const cmat& H = h.taps[static_cast<size_t>(ell)];
    require(H.rows() == nrx && H.cols() == ntx, ErrorCode::DimensionMismatch,
            "to_angle_delay: taps differ in shape");
    // U_rx^H H U_tx = U_rx^H (U_tx^T H^T)^T and U_tx is symmetric.
    const cmat left = kernels::dft_columns(H, Direction::Inverse);
    const cmat right = kernels::dft_columns(left.transpose(), Direction::Forward);
    c.C.middleCols(ell * ntx, ntx) = right.transpose();
  }
  return c;
}

WidebandChannel from_angle_delay(const AngleDelayChannel& c, double T) {
  require(c.Ntx > 0 && c.L > 0 && c.C.cols() == static_cast<Eigen::Index>(c.Ntx) * c.L,
          ErrorCode::DimensionMismatch, "from_angle_delay: C has wrong column count");
  WidebandChannel h;
  h.T = T;
  h.taps.reserve(static_cast<size_t>(c.L));
  for (int ell = 0; ell < c.L; ++ell) {
    const cmat block = c.block(ell);
    const cmat left = kernels::dft_columns(block, Direction::Forward);
    // (U_rx B) U_tx^H = ((U_tx^H)^T (U_rx B)^T)^T with U_tx^H symmetric.
    const cmat right = kernels::dft_columns(left.transpose(), Direction::Inverse);
    h.taps.push_back(right.transpose());
  }
  return h;
}

double normalization_constant(const std::vector<AngleDelayChannel>& ensemble) {
  require(!ensemble.empty(), ErrorCode::DegenerateInput,
          "normalization_constant: empty ensemble");
  const double target = static_cast<double>(ensemble.front().Nrx()) * ensemble.front().Ntx;
  double mean = 0.0;
  for (const auto& c : ensemble) mean += c.C.squaredNorm();
  mean /= static_cast<double>(ensemble.size());
  require(mean > 0.0, ErrorCode::DegenerateInput,
          "normalization_constant: all-zero ensemble");
  return std::sqrt(target / mean);
}

double calibrate_normalization(const ChannelGenParams& params, int ensemble_size,
                               std::uint64_t seed) {
  require(ensemble_size >= 1, ErrorCode::InvalidArgument,
          "calibrate_normalization: ensemble size must be positive");
  Rng rng(seed);
  std::vector<AngleDelayChannel> ensemble;
  ensemble.reserve(static_cast<size_t>(ensemble_size));
  for (int i = 0; i < ensemble_size; ++i) {
    ensemble.push_back(to_angle_delay(synthesize_taps(sample_rays(params, rng), params)));
  }
  return normalization_constant(ensemble);
}

double grid_angle(int k, int N) {
  // pi sin(theta) = 2 pi k / N, folded into (-pi, pi].
  double w = 2.0 * static_cast<double>(k) / N;
  w -= 2.0 * std::floor((w + 1.0) / 2.0);
  return std::asin(std::clamp(w, -1.0, 1.0));
}

AngleDelayChannel sample_exact_sparse(int Nrx, int Ntx, int L, int nonzeros, Rng& rng) {
  const int total = Nrx * Ntx * L;
  require(Nrx > 0 && Ntx > 0 && L > 0, ErrorCode::InvalidDimension,
          "sample_exact_sparse: dimensions must be positive");
  require(nonzeros >= 1 && nonzeros <= total, ErrorCode::InvalidArgument,
          "sample_exact_sparse: nonzero count out of range");
  std::vector<int> idx(static_cast<size_t>(total));
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates keeps the draw sequence independent of the library's
  // shuffle implementation.
  for (int i = 0; i < nonzeros; ++i) {
    std::uniform_int_distribution<int> pick(i, total - 1);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(pick(rng))]);
  }
  AngleDelayChannel c;
  c.Ntx = Ntx;
  c.L = L;
  c.C = cmat::Zero(Nrx, static_cast<Eigen::Index>(Ntx) * L);
  const double var = static_cast<double>(Nrx) * Ntx / nonzeros;
  for (int i = 0; i < nonzeros; ++i) {
    c.C.reshaped()(idx[static_cast<size_t>(i)]) = complex_normal(rng, var);
  }
  return c;
}

}  // namespace mmwsync::channel
