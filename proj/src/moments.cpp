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

#include "mmwsync/moments.hpp"

#include <cmath>

#include "mmwsync/errors.hpp"
#include "mmwsync/kernels.hpp"

namespace mmwsync::pbigamp {

namespace {

struct RealMoments {
  double mean;
  double var;
};

// Prior N(mu, v), observation sign = s of x + N(0, w).
RealMoments probit_rail(double s, double mu, double v, double w) {
  const double scale = std::sqrt(v + w);
  const double u = s * mu / scale;
  const double ratio = kernels::inverse_mills(u);
  const double mean = mu + s * (v / scale) * ratio;
  const double var = v - (v * v / (v + w)) * ratio * (u + ratio);
  return {mean, var};
}

}  // namespace

Moments output_moments(cplx y, cplx p_hat, double nu_p, double sigma2,
                       measurement::Quantizer q) {
  require(nu_p > 0.0, ErrorCode::InvalidArgument, "output_moments: nu_p must be positive");
  if (q == measurement::Quantizer::Full) {
    const double denom = nu_p + sigma2;
    return {(nu_p * y + sigma2 * p_hat) / denom, nu_p * sigma2 / denom};
  }
  const double v = nu_p / 2.0;
  const double w = sigma2 / 2.0;
  const auto re = probit_rail(y.real() >= 0.0 ? 1.0 : -1.0, p_hat.real(), v, w);
  const auto im = probit_rail(y.imag() >= 0.0 ? 1.0 : -1.0, p_hat.imag(), v, w);
  return {{re.mean, im.mean}, re.var + im.var};
}

InputMoments input_moments_bg(cplx r_hat, double nu_r, double lambda, double sigma_x2) {
  require(nu_r > 0.0, ErrorCode::InvalidArgument, "input_moments_bg: nu_r must be positive");
  require(lambda >= 0.0 && lambda <= 1.0 && sigma_x2 > 0.0, ErrorCode::InvalidArgument,
          "input_moments_bg: lambda must lie in [0, 1] and sigma_x2 be positive");
  InputMoments out;
  if (lambda >= 1.0) return out;

  const double total = sigma_x2 + nu_r;
  const double r2 = std::norm(r_hat);
  // log of (lambda / (1 - lambda)) CN(r; 0, nu_r) / CN(r; 0, sigma_x2 + nu_r)
  const double log_odds_zero =
      std::log(lambda) - std::log1p(-lambda) + std::log(total / nu_r) - r2 / nu_r + r2 / total;
  out.pi = 1.0 / (1.0 + std::exp(log_odds_zero));
  out.active_mean = r_hat * (sigma_x2 / total);
  out.active_var = sigma_x2 * nu_r / total;
  out.mean = out.pi * out.active_mean;
  // pi (v_a + |m_a|^2) - |pi m_a|^2
  out.var = out.pi * out.active_var + out.pi * (1.0 - out.pi) * std::norm(out.active_mean);
  return out;
}

}  // namespace mmwsync::pbigamp
