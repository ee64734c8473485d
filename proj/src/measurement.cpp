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

#include "mmwsync/measurement.hpp"

#include <cmath>

#include "mmwsync/errors.hpp"
#include "mmwsync/kernels.hpp"

namespace mmwsync::measurement {

const char* to_string(Quantizer q) { return q == Quantizer::OneBit ? "1" : "inf"; }

Quantizer parse_quantizer(const std::string& s) {
  if (s == "1" || s == "one_bit" || s == "onebit") return Quantizer::OneBit;
  if (s == "inf" || s == "full" || s == "infinity") return Quantizer::Full;
  fail(ErrorCode::Parse, "unknown quantizer '" + s + "' (expected 1 or inf)");
}

cmat forward_factored(const channel::AngleDelayChannel& C,
                      const training::EffectiveTraining& F, const cvec& b) {
  require(C.C.cols() == F.F.rows(), ErrorCode::DimensionMismatch,
          "forward_factored: C and F are incompatible");
  require(b.size() == F.F.cols(), ErrorCode::DimensionMismatch,
          "forward_factored: b length must equal Np");
  const cmat X = kernels::dft_columns(C.C * F.F, kernels::Direction::Forward);
  const cvec d = kernels::dft(b, kernels::Direction::Inverse);
  return X * d.asDiagonal();
}

cmat forward_tapwise(const channel::WidebandChannel& h,
                     const training::TrainingBlock& T, const cvec& d) {
  require(h.L() >= 1, ErrorCode::DimensionMismatch, "forward_tapwise: no taps");
  require(h.Ntx() == T.Ntx(), ErrorCode::DimensionMismatch,
          "forward_tapwise: channel and training disagree on Ntx");
  require(d.size() == T.Np(), ErrorCode::DimensionMismatch,
          "forward_tapwise: d length must equal Np");
  cmat Z = cmat::Zero(h.Nrx(), T.Np());
  for (int ell = 0; ell < h.L(); ++ell) {
    Z += h.taps[static_cast<size_t>(ell)] * kernels::circ_shift_columns(T.T, ell % T.Np());
  }
  return Z * d.asDiagonal();
}

cmat quantize(const cmat& X, Quantizer q) {
  if (q == Quantizer::Full) return X;
  return X.unaryExpr([](const cplx& v) {
    return cplx(v.real() >= 0.0 ? 1.0 : -1.0, v.imag() >= 0.0 ? 1.0 : -1.0);
  });
}

double snr_to_sigma2(const training::TrainingBlock& T, double snr_db) {
  const double energy = T.T.squaredNorm();
  require(energy > 0.0, ErrorCode::DegenerateInput, "snr_to_sigma2: zero training block");
  return energy / (T.Np() * std::pow(10.0, snr_db / 10.0));
}

ReceivedBlock observe(const cmat& Z, double sigma2, Quantizer q, Rng& rng) {
  require(sigma2 >= 0.0, ErrorCode::InvalidArgument, "observe: sigma2 must be >= 0");
  ReceivedBlock out;
  out.q = q;
  out.sigma2 = sigma2;
  cmat noisy = Z;
  if (sigma2 > 0.0) {
    for (Eigen::Index c = 0; c < Z.cols(); ++c)
      for (Eigen::Index r = 0; r < Z.rows(); ++r) noisy(r, c) += complex_normal(rng, sigma2);
  }
  out.Y = quantize(noisy, q);
  return out;
}

}  // namespace mmwsync::measurement
