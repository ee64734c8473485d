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

#include "mmwsync/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mmwsync/channel.hpp"
#include "mmwsync/errors.hpp"
#include "mmwsync/kernels.hpp"
#include "mmwsync/measurement.hpp"
#include "mmwsync/oracle.hpp"
#include "mmwsync/pbigamp.hpp"
#include "mmwsync/phase.hpp"
#include "mmwsync/training.hpp"

namespace mmwsync::selftest {

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

struct Reporter {
  const std::function<void(const std::string&)>& line;
  int failures = 0;

  void check(bool ok, const std::string& name, const std::string& detail) {
    if (!ok) ++failures;
    if (line) line(std::string(ok ? "PASS " : "FAIL ") + name + ": " + detail);
  }
};

double step_equivalence(Rng& rng, measurement::Quantizer q, int instances) {
  const Dims dims{4, 4, 2, 8};
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const auto T = training::gen_training(training::TrainingKind::IID_QPSK, dims.Ntx, dims.Np,
                                          1.0, rng);
    const auto F = training::assemble_F(T, dims.L);
    const pbigamp::Operator op(dims.Nrx, F);
    const auto tensor = oracle::build_tensor(dims.Nrx, F);
    const auto st = oracle::random_state(dims, rng);
    cmat Y(dims.Nrx, dims.Np);
    for (int n = 0; n < dims.Np; ++n)
      for (int r = 0; r < dims.Nrx; ++r) Y(r, n) = complex_normal(rng);
    Y = measurement::quantize(Y, q);
    pbigamp::Hyperparams hp;
    hp.lambda_b = 0.7;
    hp.lambda_c = 0.6;
    hp.sigma_b2 = 2.0;
    hp.sigma_c2 = 0.5;
    hp.sigma2 = 0.3;
    const auto fast = pbigamp::fast_step(op, st, Y, hp, q);
    const auto generic = oracle::generic_pbigamp_step(st, tensor, Y, hp, q);
    worst = std::max(worst, oracle::compare_steps(fast, generic).max_rel);
  }
  return worst;
}

}  // namespace

int run(std::uint64_t seed, const std::function<void(const std::string&)>& line) {
  Reporter rep{line};
  Rng rng(seed);

  // DFT unitarity and FFT agreement with the dense definition.
  {
    double err = 0.0;
    for (int N : {1, 2, 7, 16, 64}) {
      const cmat U = kernels::dft_matrix(N);
      err = std::max(err, (U * U.adjoint() - cmat::Identity(N, N)).cwiseAbs().maxCoeff());
      cvec x(N);
      for (int i = 0; i < N; ++i) x(i) = complex_normal(rng);
      err = std::max(err, (kernels::dft(x, kernels::Direction::Forward) - U * x).norm());
      err = std::max(err, (kernels::dft(x, kernels::Direction::Inverse) - U.adjoint() * x).norm());
    }
    rep.check(err <= 1e-12, "dft_unitary", "max error " + sci(err));
  }

  // Fast kernels against the literal tensor recursion.
  {
    const double full = step_equivalence(rng, measurement::Quantizer::Full, 20);
    const double onebit = step_equivalence(rng, measurement::Quantizer::OneBit, 20);
    rep.check(full <= 1e-8, "pbigamp_step_full", "max relative error " + sci(full));
    rep.check(onebit <= 1e-8, "pbigamp_step_onebit", "max relative error " + sci(onebit));
  }

  // Closed-form moments against quadrature on a 100-point grid.
  {
    std::uniform_real_distribution<double> mean(-2.0, 2.0);
    std::uniform_real_distribution<double> var(0.1, 3.0);
    std::uniform_real_distribution<double> lam(0.0, 0.99);
    double out_err = 0.0;
    double in_err = 0.0;
    for (int k = 0; k < 100; ++k) {
      const cplx p(mean(rng), mean(rng));
      const double nu_p = var(rng);
      const double s2 = var(rng);
      const cplx y(k % 2 ? 1.0 : -1.0, k % 3 ? 1.0 : -1.0);
      const auto a = pbigamp::output_moments(y, p, nu_p, s2, measurement::Quantizer::OneBit);
      const auto b = oracle::quadrature_output_moments(y, p, nu_p, s2,
                                                       measurement::Quantizer::OneBit);
      out_err = std::max({out_err, std::abs(a.mean - b.mean), std::abs(a.var - b.var)});

      const cplx r(mean(rng), mean(rng));
      const double nu_r = var(rng);
      const double l = lam(rng);
      const double sx = var(rng);
      const auto c = pbigamp::input_moments_bg(r, nu_r, l, sx);
      const auto d = oracle::quadrature_input_moments_bg(r, nu_r, l, sx);
      in_err = std::max({in_err, std::abs(c.mean - d.mean), std::abs(c.var - d.var),
                         std::abs(c.pi - d.pi)});
    }
    rep.check(out_err <= 1e-6, "output_moments_onebit", "max abs error " + sci(out_err));
    rep.check(in_err <= 1e-6, "input_moments_bg", "max abs error " + sci(in_err));
  }

  // Tapwise and factored forward models.
  {
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const int Nrx = 2 + k % 5, Ntx = 2 + (k / 5) % 4, L = 1 + k % 4, Np = 8 + 4 * (k % 7);
      channel::WidebandChannel h;
      for (int ell = 0; ell < L; ++ell) {
        cmat H(Nrx, Ntx);
        for (int c = 0; c < Ntx; ++c)
          for (int r = 0; r < Nrx; ++r) H(r, c) = complex_normal(rng);
        h.taps.push_back(H);
      }
      const auto T = training::gen_training(training::TrainingKind::IID_GAUSSIAN, Ntx, Np, 1.0, rng);
      std::uniform_real_distribution<double> e(-0.5, 0.5);
      const cvec d = phase::gen_phase_errors({e(rng), 0.05, Np}, rng);
      const cmat Z1 = measurement::forward_tapwise(h, T, d);
      const cmat Z2 = measurement::forward_factored(channel::to_angle_delay(h),
                                                    training::assemble_F(T, L),
                                                    phase::to_spectrum(d));
      worst = std::max(worst, (Z1 - Z2).norm() / Z1.norm());
    }
    rep.check(worst <= 1e-10, "forward_model", "max relative error " + sci(worst));
  }

  // CFO propagation with circulant ZC training.
  {
    const int N = 16;
    const auto T = training::gen_training(training::TrainingKind::SHIFTED_ZC, N, N, 1.0, rng);
    const auto C = channel::sample_exact_sparse(4, N, 1, 5, rng);
    double worst = 0.0;
    bool support = true;
    for (int d = 0; d < N; ++d) {
      const auto res = oracle::cfo_propagation_check(T, C.C, d);
      worst = std::max(worst, res.residual);
      support = support && res.nnz_after == res.nnz_before;
    }
    rep.check(worst <= 1e-10 && support, "cfo_propagation",
              "max residual " + sci(worst) + (support ? ", support preserved" : ", support changed"));
  }

  return rep.failures;
}

}  // namespace mmwsync::selftest
