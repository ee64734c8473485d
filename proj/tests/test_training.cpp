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

#include <catch_amalgamated.hpp>

#include "mmwsync/errors.hpp"
#include "mmwsync/kernels.hpp"
#include "mmwsync/training.hpp"
#include "test_util.hpp"

using namespace mmwsync;
using namespace mmwsync::training;
using Catch::Approx;

namespace {

cvec circular_autocorr(const cvec& z) {
  const int N = static_cast<int>(z.size());
  cvec r(N);
  for (int k = 0; k < N; ++k) {
    cplx acc = 0.0;
    for (int n = 0; n < N; ++n) acc += z[n] * std::conj(z[(n + k) % N]);
    r[k] = acc;
  }
  return r;
}

}  // namespace

TEST_CASE("QPSK entries have magnitude sqrt(P / Ntx)", "[training]") {
  Rng rng(1);
  const TrainingBlock T = gen_training(TrainingKind::IID_QPSK, 8, 64, 2.0, rng);
  CHECK(T.Ntx() == 8);
  CHECK(T.Np() == 64);
  for (Eigen::Index j = 0; j < T.T.cols(); ++j) {
    for (Eigen::Index i = 0; i < T.T.rows(); ++i)
      CHECK(std::abs(T.T(i, j)) == Approx(std::sqrt(2.0 / 8.0)).epsilon(1e-15));
    CHECK(T.T.col(j).squaredNorm() == Approx(2.0));
  }
}

TEST_CASE("Gaussian training energy", "[training]") {
  Rng rng(2);
  const TrainingBlock T = gen_training(TrainingKind::IID_GAUSSIAN, 4, 10000, 1.0, rng);
  CHECK(T.T.squaredNorm() / T.Np() == Approx(1.0).epsilon(0.05));
}

TEST_CASE("ZC sequences", "[training]") {
  for (auto [Np, root] : {std::pair{16, 1}, std::pair{16, 3}, std::pair{17, 2}, std::pair{63, 5}}) {
    const cvec z = zc_sequence(Np, root);
    CHECK((z.cwiseAbs() - rvec::Ones(Np)).norm() < 1e-12);
    const cvec r = circular_autocorr(z);
    CHECK(std::abs(r[0] - cplx(Np, 0.0)) < 1e-9);
    CHECK(r.tail(Np - 1).norm() < 1e-9);
    const cvec Z = kernels::dft(z, kernels::Direction::Forward);
    CHECK((Z.cwiseAbs() - rvec::Constant(Np, 1.0)).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(zc_sequence(16, 2), Error);
}

TEST_CASE("shifted ZC rows keep perfect autocorrelation", "[training]") {
  Rng rng(3);
  const TrainingBlock T = gen_training(TrainingKind::SHIFTED_ZC, 4, 16, 1.0, rng);
  for (int i = 0; i < 4; ++i) {
    const cvec r = circular_autocorr(T.T.row(i).transpose());
    CHECK(r.tail(15).norm() < 1e-9 * std::abs(r[0]));
  }
}

TEST_CASE("assemble_F block structure", "[training]") {
  Rng rng(4);
  const TrainingBlock T = gen_training(TrainingKind::IID_QPSK, 4, 16, 1.0, rng);
  const cmat Uh = kernels::dft_matrix(4).adjoint();

  const EffectiveTraining F1 = assemble_F(T, 1);
  CHECK(testing::rel_err(F1.F, Uh * T.T) < 1e-12);

  const EffectiveTraining F3 = assemble_F(T, 3);
  CHECK(F3.F.rows() == 12);
  CHECK(F3.Np() == 16);
  for (int l = 0; l < 3; ++l) {
    CHECK(F3.F.middleRows(4 * l, 4).norm() == Approx(T.T.norm()).epsilon(1e-12));
    CHECK(testing::rel_err(F3.F.middleRows(4 * l, 4), Uh * kernels::circ_shift_columns(T.T, l)) <
          1e-12);
  }
  CHECK(F3.F.squaredNorm() == Approx(3 * T.T.squaredNorm()).epsilon(1e-9));
}

TEST_CASE("circulant ZC training is diagonalized by the DFT", "[training]") {
  Rng rng(5);
  const int N = 16;
  const TrainingBlock T = gen_training(TrainingKind::SHIFTED_ZC, N, N, 1.0, rng);
  const cmat U = kernels::dft_matrix(N);
  const cmat Lam = U.adjoint() * T.T * U;
  const cvec diag = Lam.diagonal();
  CHECK((Lam - cmat(diag.asDiagonal())).norm() < 1e-9 * Lam.norm());
  const double m0 = std::abs(diag[0]);
  CHECK((diag.cwiseAbs() - rvec::Constant(N, m0)).cwiseAbs().maxCoeff() < 1e-9 * m0);
  // U^H T = Lambda U^H
  CHECK(testing::rel_err(U.adjoint() * T.T, cmat(diag.asDiagonal()) * U.adjoint()) < 1e-9);
  const EffectiveTraining F = assemble_F(T, 1);
  const cmat G = F.F * F.F.adjoint();
  CHECK((G - cmat(G.diagonal().asDiagonal())).norm() < 1e-9 * G.norm());
}

TEST_CASE("training kind names round trip", "[training]") {
  for (auto k : {TrainingKind::IID_QPSK, TrainingKind::IID_GAUSSIAN, TrainingKind::SHIFTED_ZC})
    CHECK(parse_training_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_training_kind("bpsk"), Error);
}
