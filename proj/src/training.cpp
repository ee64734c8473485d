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

#include "mmwsync/training.hpp"

#include <cmath>
#include <numeric>

#include "mmwsync/errors.hpp"
#include "mmwsync/kernels.hpp"

namespace mmwsync::training {

const char* to_string(TrainingKind kind) {
  switch (kind) {
    case TrainingKind::IID_QPSK: return "IID_QPSK";
    case TrainingKind::IID_GAUSSIAN: return "IID_GAUSSIAN";
    case TrainingKind::SHIFTED_ZC: return "SHIFTED_ZC";
  }
  return "?";
}

TrainingKind parse_training_kind(const std::string& name) {
  if (name == "IID_QPSK" || name == "qpsk") return TrainingKind::IID_QPSK;
  if (name == "IID_GAUSSIAN" || name == "gaussian") return TrainingKind::IID_GAUSSIAN;
  if (name == "SHIFTED_ZC" || name == "zc") return TrainingKind::SHIFTED_ZC;
  fail(ErrorCode::Parse, "unknown training kind '" + name + "'");
}

cvec zc_sequence(int Np, int root) {
  require(Np >= 1, ErrorCode::InvalidDimension, "zc_sequence: Np must be >= 1");
  require(root > 0 && std::gcd(root, Np) == 1, ErrorCode::InvalidArgument,
          "zc_sequence: root must be positive and coprime to Np");
  cvec z(Np);
  const long long mod = 2LL * Np;
  for (long long n = 0; n < Np; ++n) {
    const long long q = (Np % 2 == 1) ? n * (n + 1) : n * n;
    const long long k = (static_cast<long long>(root) % mod) * (q % mod) % mod;
    z[n] = std::polar(1.0, -kPi * static_cast<double>(k) / Np);
  }
  return z;
}

TrainingBlock gen_training(TrainingKind kind, int Ntx, int Np, double P, Rng& rng) {
  require(Ntx >= 1 && Np >= 1, ErrorCode::InvalidDimension,
          "gen_training: Ntx and Np must be >= 1");
  require(P > 0.0, ErrorCode::InvalidArgument, "gen_training: P must be positive");
  TrainingBlock out;
  out.P = P;
  out.T.resize(Ntx, Np);
  const double amp = std::sqrt(P / Ntx);
  switch (kind) {
    case TrainingKind::IID_QPSK: {
      std::bernoulli_distribution bit(0.5);
      const double a = amp / std::sqrt(2.0);
      for (int n = 0; n < Np; ++n) {
        for (int i = 0; i < Ntx; ++i) {
          const double re = bit(rng) ? a : -a;
          const double im = bit(rng) ? a : -a;
          out.T(i, n) = {re, im};
        }
      }
      break;
    }
    case TrainingKind::IID_GAUSSIAN:
      for (int n = 0; n < Np; ++n)
        for (int i = 0; i < Ntx; ++i) out.T(i, n) = complex_normal(rng, P / Ntx);
      break;
    case TrainingKind::SHIFTED_ZC: {
      require(Ntx <= Np, ErrorCode::InvalidArgument,
              "gen_training: shifted ZC needs Ntx <= Np");
      const cvec z = zc_sequence(Np, 1);
      const int spacing = Np / Ntx;
      for (int i = 0; i < Ntx; ++i) {
        const int shift = i * spacing;
        for (int n = 0; n < Np; ++n) out.T(i, n) = amp * z[((n - shift) % Np + Np) % Np];
      }
      break;
    }
  }
  return out;
}

EffectiveTraining assemble_F(const TrainingBlock& T, int L) {
  require(L >= 1, ErrorCode::InvalidDimension, "assemble_F: L must be >= 1");
  require(T.Ntx() >= 1 && T.Np() >= 1, ErrorCode::InvalidDimension,
          "assemble_F: empty training block");
  EffectiveTraining eff;
  eff.Ntx = T.Ntx();
  eff.L = L;
  eff.F.resize(static_cast<Eigen::Index>(eff.Ntx) * L, T.Np());
  const cmat base = kernels::dft_columns(T.T, kernels::Direction::Inverse);
  for (int ell = 0; ell < L; ++ell) {
    // J_ell permutes columns, which commutes with the row-side DFT.
    eff.F.middleRows(ell * eff.Ntx, eff.Ntx) =
        kernels::circ_shift_columns(base, ell % T.Np());
  }
  return eff;
}

}  // namespace mmwsync::training
