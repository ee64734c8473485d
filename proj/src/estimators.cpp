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

#include "mmwsync/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "mmwsync/errors.hpp"
#include "mmwsync/kernels.hpp"

namespace mmwsync::estimators {

channel::WidebandChannel reconstruct_taps(const cmat& C_hat, int Ntx, int L, double T) {
  require(Ntx > 0 && L > 0 && C_hat.cols() == static_cast<Eigen::Index>(Ntx) * L,
          ErrorCode::DimensionMismatch, "reconstruct_taps: C_hat must have Ntx L columns");
  return channel::from_angle_delay({C_hat, Ntx, L}, T);
}

channel::WidebandChannel reconstruct_taps(const cvec& c_hat, const Dims& dims, double T) {
  require(dims.valid() && c_hat.size() == dims.num_c(), ErrorCode::DimensionMismatch,
          "reconstruct_taps: c_hat length must be Nrx Ntx L");
  const cmat C = Eigen::Map<const cmat>(c_hat.data(), dims.Nrx, dims.Ntx * dims.L);
  return reconstruct_taps(C, dims.Ntx, dims.L, T);
}

double wrap_angle(double x) {
  double w = std::remainder(x, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

void EkfState::predict() {
  theta += eps;
  Eigen::Matrix2d F;
  F << 1.0, 1.0, 0.0, 1.0;
  covariance = F * covariance * F.transpose();
  covariance(0, 0) += q_theta;
  covariance(1, 1) += q_eps;
}

void EkfState::update(cplx u) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix<double, 2, 2> H;
  H << -s, 0.0, c, 0.0;
  const Eigen::Vector2d innov(u.real() - c, u.imag() - s);
  const Eigen::Matrix2d S = H * covariance * H.transpose() + r * Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d K = covariance * H.transpose() * S.inverse();
  const Eigen::Vector2d dx = K * innov;
  theta += dx(0);
  eps += dx(1);
  // Joseph form.
  const Eigen::Matrix2d IKH = Eigen::Matrix2d::Identity() - K * H;
  covariance = IKH * covariance * IKH.transpose() + r * K * K.transpose();
  covariance = (0.5 * (covariance + covariance.transpose())).eval();
}

double cfo_estimate(const cvec& b_hat, double beta, double sigma2_eff) {
  require(b_hat.size() >= 2, ErrorCode::InvalidArgument, "cfo_estimate: need at least 2 samples");
  require(beta >= 0.0, ErrorCode::InvalidArgument, "cfo_estimate: beta must be >= 0");
  const int Np = static_cast<int>(b_hat.size());
  const cvec m = kernels::dft(b_hat, kernels::Direction::Inverse);
  const double energy = m.squaredNorm();
  require(std::isfinite(energy) && energy > 1e-300 * Np, ErrorCode::EstimationFailed,
          "cfo_estimate: samples are all near zero");

  cplx acc = 0.0;
  for (int n = 0; n + 1 < Np; ++n) acc += m(n + 1) * std::conj(m(n));
  double eps0 = 0.0;
  if (std::abs(acc) >= 0.1 * energy) {
    eps0 = std::arg(acc);
  } else {
    Eigen::Index k = 0;
    b_hat.cwiseAbs2().maxCoeff(&k);
    eps0 = wrap_angle(2.0 * kPi * static_cast<double>(k) / Np);
  }

  const double mean_amp = m.cwiseAbs().mean();
  const double amp_floor = 1e-12 * mean_amp;
  cvec u(Np);
  for (int n = 0; n < Np; ++n) u(n) = m(n) / std::max(std::abs(m(n)), amp_floor);

  double r = sigma2_eff;
  if (!(r > 0.0)) {
    const rvec rel = m.cwiseAbs() / mean_amp;
    r = (rel.array() - 1.0).square().mean();
  }

  EkfState ekf;
  ekf.theta = std::arg(u(0));
  ekf.eps = eps0;
  ekf.q_theta = beta * beta;
  ekf.r = std::max(r, 1e-8);
  ekf.covariance << ekf.r, 0.0, 0.0, std::pow(2.0 * kPi / Np, 2);
  for (int n = 1; n < Np; ++n) {
    ekf.predict();
    ekf.update(u(n));
  }
  return wrap_angle(ekf.eps);
}

}  // namespace mmwsync::estimators
