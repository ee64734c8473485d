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

#include <limits>

#include "mmwsync/channel.hpp"
#include "mmwsync/errors.hpp"
#include "mmwsync/harness.hpp"
#include "mmwsync/oracle.hpp"
#include "mmwsync/phase.hpp"
#include "test_util.hpp"

using namespace mmwsync;
using namespace mmwsync::oracle;
using measurement::Quantizer;
using Catch::Approx;

namespace {

std::vector<double> bin_grid(int Np, int skip = std::numeric_limits<int>::min()) {
  std::vector<double> g;
  for (int k = -Np / 2 + 1; k <= Np / 2; ++k)
    if (k != skip) g.push_back(2 * kPi * k / Np);
  return g;
}

double correlation(const cmat& a, const cmat& b) {
  return std::abs(a.cwiseProduct(b.conjugate()).sum()) / (a.norm() * b.norm());
}

}  // namespace

TEST_CASE("tensor entries factor with constant-modulus G", "[oracle]") {
  Rng rng(1);
  const auto T = training::gen_training(training::TrainingKind::IID_QPSK, 3, 8, 1.0, rng);
  const auto F = training::assemble_F(T, 2);
  const Tensor z = build_tensor(2, F);
  CHECK(z.M == 16);
  CHECK(z.Nb == 8);
  CHECK(z.Nc == 12);
  for (int m = 0; m < z.M; ++m)
    for (int k = 0; k < z.Nc; ++k)
      for (int i = 1; i < z.Nb; ++i)
        CHECK(std::abs(z(m, i, k)) == Approx(std::abs(z(m, 0, k))).margin(1e-14));
}

TEST_CASE("tensor size guard", "[oracle]") {
  Rng rng(2);
  const auto T = training::gen_training(training::TrainingKind::IID_QPSK, 32, 1024, 1.0, rng);
  CHECK_THROWS_AS(build_tensor(32, training::assemble_F(T, 16)), Error);
}

TEST_CASE("generic step with zero variances", "[oracle]") {
  Rng rng(3);
  const Dims d{2, 2, 2, 4};
  pbigamp::GampState st = random_state(d, rng);
  st.nu_b.setZero();
  st.nu_c.setZero();
  const auto T = training::gen_training(training::TrainingKind::IID_QPSK, 2, 4, 1.0, rng);
  const auto F = training::assemble_F(T, 2);
  const cmat Y = testing::random_cmat(2, 4, rng);
  const GenericStep g = generic_pbigamp_step(st, build_tensor(2, F), Y,
                                             pbigamp::Hyperparams::defaults(d, 1.0), Quantizer::Full);
  CHECK(g.nu_p_bar.norm() == 0.0);
  CHECK((g.p_hat - g.z_bar).norm() == 0.0);
}

TEST_CASE("step comparison reports the worst output", "[oracle]") {
  Rng rng(4);
  const Dims d{2, 2, 1, 4};
  const auto T = training::gen_training(training::TrainingKind::IID_QPSK, 2, 4, 1.0, rng);
  const auto F = training::assemble_F(T, 1);
  const pbigamp::Operator op(2, F);
  const pbigamp::GampState st = random_state(d, rng);
  const cmat Y = testing::random_cmat(2, 4, rng);
  const auto hp = pbigamp::Hyperparams::defaults(d, 1.0);
  auto fast = pbigamp::fast_step(op, st, Y, hp, Quantizer::Full);
  const auto slow = generic_pbigamp_step(st, build_tensor(2, F), Y, hp, Quantizer::Full);
  CHECK(compare_steps(fast, slow).max_rel < 1e-10);
  fast.b_next *= 2.0;
  const auto bad = compare_steps(fast, slow);
  CHECK(bad.max_rel > 0.5);
  CHECK(bad.worst == "b_next");
}

TEST_CASE("grid least squares recovers an on-grid instance", "[oracle]") {
  Rng rng(5);
  const int Nrx = 4, Ntx = 4, Np = 16;
  channel::WidebandChannel h;
  h.taps = {testing::random_cmat(Nrx, Ntx, rng)};
  const auto T = training::gen_training(training::TrainingKind::IID_QPSK, Ntx, Np, 1.0, rng);
  const double eps = 2 * kPi * 3 / Np;
  const cvec d = phase::gen_phase_errors({eps, 0.0, Np}, rng);
  measurement::ReceivedBlock Y;
  Y.Y = measurement::forward_tapwise(h, T, d);

  const GridLsResult full = grid_ls_estimate(Y, T, 1, bin_grid(Np));
  CHECK(full.eps_hat == Approx(eps));
  CHECK(full.residual <= 1e-10);
  CHECK(testing::rel_err(full.h_hat.taps[0], h.taps[0]) <= 1e-8);
  CHECK(full.residuals.size() == static_cast<size_t>(Np));

  const GridLsResult miss = grid_ls_estimate(Y, T, 1, bin_grid(Np, 3));
  CHECK(miss.residual > full.residual);

  Y.q = Quantizer::OneBit;
  CHECK_THROWS_AS(grid_ls_estimate(Y, T, 1, bin_grid(Np)), Error);
}

TEST_CASE("grid least squares needs enough pilots", "[oracle]") {
  Rng rng(6);
  const auto T = training::gen_training(training::TrainingKind::IID_QPSK, 4, 8, 1.0, rng);
  measurement::ReceivedBlock Y;
  Y.Y = testing::random_cmat(2, 8, rng);
  CHECK_THROWS_AS(grid_ls_estimate(Y, T, 3, {0.0}), Error);
}

TEST_CASE("grid least squares and the message-passing solver agree", "[oracle][slow]") {
  Rng rng(7);
  const int Nrx = 8, Ntx = 8, L = 4, Np = 256;
  const auto C = channel::sample_exact_sparse(Nrx, Ntx, L, 8, rng);
  const auto T = training::gen_training(training::TrainingKind::IID_QPSK, Ntx, Np, 1.0, rng);
  const auto F = training::assemble_F(T, L);
  const cvec d = phase::gen_phase_errors({2 * kPi * 4 / Np, 0.0, Np}, rng);
  measurement::ReceivedBlock Y;
  Y.Y = measurement::forward_factored(C, F, phase::to_spectrum(d));

  const GridLsResult ls = grid_ls_estimate(Y, T, L, bin_grid(Np));
  const auto gamp = pbigamp::run(Y, F, pbigamp::Hyperparams::defaults({Nrx, Ntx, L, Np}, 0.0),
                                 pbigamp::GampConfig{});
  CHECK(correlation(channel::to_angle_delay(ls.h_hat).C, gamp.C_hat) >= 0.99);
}

TEST_CASE("CFO propagation with circulant training", "[oracle]") {
  Rng rng(8);
  const int N = 16;
  const auto T = training::gen_training(training::TrainingKind::SHIFTED_ZC, N, N, 1.0, rng);
  const auto C = channel::sample_exact_sparse(4, N, 1, 5, rng);

  const PropagationCheck zero = cfo_propagation_check(T, C.C, 0);
  CHECK(testing::rel_err(zero.C_eps, C.C) < 1e-12);
  CHECK(zero.residual < 1e-12);

  for (int d = 1; d < N; ++d) {
    const PropagationCheck pc = cfo_propagation_check(T, C.C, d);
    CHECK(pc.residual <= 1e-10);
    CHECK(pc.nnz_before == 5);
    CHECK(pc.nnz_after == pc.nnz_before);
  }

  const auto qpsk = training::gen_training(training::TrainingKind::IID_QPSK, N, N, 1.0, rng);
  CHECK_THROWS_AS(cfo_propagation_check(qpsk, C.C, 3), Error);
}

TEST_CASE("support size", "[oracle]") {
  cmat C = cmat::Zero(3, 3);
  CHECK(support_size(C) == 0);
  C(0, 0) = 1.0;
  C(1, 2) = 1e-3;
  C(2, 1) = 1e-12;
  CHECK(support_size(C) == 2);
}

TEST_CASE("quadrature reproduces conjugate closed forms", "[oracle]") {
  const cplx y(0.4, -1.1), p(-0.2, 0.9);
  const auto q = quadrature_output_moments(y, p, 0.7, 0.3, Quantizer::Full);
  CHECK(std::abs(q.mean - (0.7 * y + 0.3 * p) / 1.0) < 1e-8);
  CHECK(q.var == Approx(0.21).margin(1e-8));

  const auto pr = quadrature_output_moments(cplx(1, 1), 0.0, 1.0, 1.0, Quantizer::OneBit);
  CHECK(pr.mean.real() == Approx(0.5 * std::sqrt(2 / kPi)).margin(1e-9));

  const auto bg = quadrature_input_moments_bg(cplx(1.0, 0.5), 0.5, 0.0, 2.0);
  CHECK(std::abs(bg.mean - cplx(1.0, 0.5) * 0.8) < 1e-8);
  CHECK(bg.var == Approx(0.4).margin(1e-8));
}
