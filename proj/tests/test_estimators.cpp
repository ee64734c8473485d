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

#include <algorithm>

#include "mmwsync/channel.hpp"
#include "mmwsync/errors.hpp"
#include "mmwsync/estimators.hpp"
#include "mmwsync/harness.hpp"
#include "mmwsync/phase.hpp"
#include "test_util.hpp"

using namespace mmwsync;
using namespace mmwsync::estimators;
using Catch::Approx;

namespace {

cvec tone_spectrum(double eps, int Np) {
  Rng rng(0);
  return phase::to_spectrum(phase::gen_phase_errors({eps, 0.0, Np}, rng));
}

}  // namespace

TEST_CASE("wrap_angle", "[estimators]") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kPi) == Approx(kPi));
  CHECK(wrap_angle(-kPi) == Approx(kPi));
  CHECK(wrap_angle(3 * kPi / 2) == Approx(-kPi / 2));
  CHECK(wrap_angle(-7.0) == Approx(-7.0 + 2 * kPi));
}

TEST_CASE("reconstruct_taps inverts the angle-delay map", "[estimators]") {
  Rng rng(1);
  channel::WidebandChannel h;
  for (int l = 0; l < 3; ++l) h.taps.push_back(testing::random_cmat(4, 5, rng));
  const auto C = channel::to_angle_delay(h);
  const auto back = reconstruct_taps(C.C, 5, 3);
  REQUIRE(back.L() == 3);
  for (int l = 0; l < 3; ++l)
    CHECK(testing::rel_err(back.taps[static_cast<size_t>(l)], h.taps[static_cast<size_t>(l)]) <
          1e-12);
  const cvec vec = Eigen::Map<const cvec>(C.C.data(), C.C.size());
  const auto from_vec = reconstruct_taps(vec, Dims{4, 5, 3, 16});
  for (int l = 0; l < 3; ++l)
    CHECK(testing::rel_err(from_vec.taps[static_cast<size_t>(l)],
                           h.taps[static_cast<size_t>(l)]) < 1e-12);
  CHECK_THROWS_AS(reconstruct_taps(C.C, 4, 3), Error);
}

TEST_CASE("noiseless tones", "[estimators]") {
  const int Np = 256;
  CHECK(std::abs(cfo_estimate(tone_spectrum(2 * kPi * 5 / Np, Np), 0.0, 0.0) - 2 * kPi * 5 / Np) <
        1e-6);
  cvec e1 = cvec::Zero(Np);
  e1[0] = std::sqrt(double(Np));
  CHECK(std::abs(cfo_estimate(e1, 0.0, 0.0)) < 1e-12);
  for (double eps : {0.1380582, -0.3, 1.2, 3.0}) {
    for (int n : {64, 256, 1024}) CHECK(std::abs(cfo_estimate(tone_spectrum(eps, n), 0.0, 0.0) - eps) < 1e-9);
  }
}

TEST_CASE("global phase does not change the estimate", "[estimators]") {
  Rng rng(2);
  const cvec b = phase::to_spectrum(phase::gen_phase_errors({0.2, 0.05, 128}, rng)) +
                 0.3 * testing::random_cvec(128, rng);
  const double a = cfo_estimate(b, 0.05, 0.0);
  for (double psi : {0.4, 2.0, -3.0})
    CHECK(cfo_estimate(std::polar(1.0, psi) * b, 0.05, 0.0) == Approx(a).margin(1e-12));
}

TEST_CASE("estimate error shrinks with the block length", "[estimators]") {
  const double eps = 0.1380582;
  std::vector<double> med;
  for (int Np : {64, 256, 1024}) {
    Rng rng(static_cast<unsigned>(Np));
    std::vector<double> err;
    for (int k = 0; k < 41; ++k) {
      cvec d = phase::gen_phase_errors({eps, 0.0, Np}, rng);
      for (int n = 0; n < Np; ++n) d[n] += complex_normal(rng, 0.1);
      err.push_back(std::abs(cfo_estimate(phase::to_spectrum(d), 0.0, 0.0) - eps));
    }
    med.push_back(harness::median(err));
  }
  CHECK(med[1] < med[0]);
  CHECK(med[2] < med[1]);
}

TEST_CASE("EKF covariance stays symmetric positive definite", "[estimators]") {
  EkfState ekf;
  ekf.q_theta = 0.01;
  ekf.r = 0.05;
  Rng rng(3);
  std::normal_distribution<double> n(0.0, 0.2);
  double theta = 0.0;
  for (int k = 0; k < 2000; ++k) {
    theta += 0.05;
    ekf.predict();
    ekf.update(std::polar(1.0, theta + n(rng)));
    REQUIRE(ekf.covariance(0, 1) == ekf.covariance(1, 0));
    REQUIRE(ekf.covariance.determinant() > 0.0);
    REQUIRE(ekf.covariance(0, 0) > 0.0);
  }
  CHECK(ekf.eps == Approx(0.05).margin(0.01));
}

TEST_CASE("degenerate spectra are rejected", "[estimators]") {
  CHECK_THROWS_AS(cfo_estimate(cvec::Zero(16), 0.0, 0.0), Error);
  CHECK_THROWS_AS(cfo_estimate(cvec::Ones(1), 0.0, 0.0), Error);
  CHECK_THROWS_AS(cfo_estimate(cvec::Ones(16), -1.0, 0.0), Error);
}

TEST_CASE("phase-noise-limited CFO error with solved spectra", "[estimators][slow]") {
  harness::ExperimentConfig cfg;
  cfg.Np = 1024;
  cfg.q = measurement::Quantizer::Full;
  cfg.snr_db = {10.0};
  cfg.cfo.mode = "epsilon";
  cfg.cfo.values = {45 * kPi / 1024};
  cfg.beta = 0.067;
  cfg.trials = 10;
  cfg.channel.norm_ensemble = 100;
  const auto summary = harness::run_experiment(cfg, {});
  int good = 0;
  for (const auto& r : summary.records) good += r.cfo_sq_err <= 1e-4;
  CHECK(good >= 9);
}
