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

#include <cmath>
#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mmwsync/mmwsync.h"

namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"({
  "Nrx": 4, "Ntx": 4, "L": 2, "Np": 64,
  "channel": {"model": "exact_sparse", "nonzeros": 4},
  "q": "1", "snr_db": [10], "cfo": {"bins": [1]}, "trials": 2,
  "solver": {"t_max": 40, "em_outer_iters": 2}
})";

void collect(const char* line, void* user) {
  static_cast<std::vector<std::string>*>(user)->emplace_back(line);
}

}  // namespace

TEST_CASE("status strings and version", "[capi]") {
  CHECK(std::string(mmws_version()).size() > 0);
  CHECK(std::string(mmws_status_string(MMWS_OK)) != "");
  CHECK(std::string(mmws_status_string(MMWS_ERR_DIVERGENCE)) !=
        std::string(mmws_status_string(MMWS_ERR_IO)));
}

TEST_CASE("experiment handle lifecycle", "[capi]") {
  mmws_experiment* exp = nullptr;
  CHECK(mmws_experiment_from_json("{\"bogus\": 1}", &exp) == MMWS_ERR_PARSE);
  CHECK(exp == nullptr);
  CHECK(std::string(mmws_last_error()).find("bogus") != std::string::npos);
  CHECK(mmws_experiment_from_json(nullptr, &exp) == MMWS_ERR_INVALID_ARGUMENT);
  CHECK(mmws_experiment_load("/nonexistent/x.json", &exp) == MMWS_ERR_IO);

  REQUIRE(mmws_experiment_from_json(kTinyConfig, &exp) == MMWS_OK);
  CHECK(mmws_experiment_set_seed(exp, 42) == MMWS_OK);
  CHECK(mmws_experiment_set_trials(exp, 0) == MMWS_ERR_INVALID_ARGUMENT);
  CHECK(mmws_experiment_set_workers(exp, 2) == MMWS_OK);
  CHECK(mmws_experiment_add_sweep(exp, "q=1,inf") == MMWS_OK);
  CHECK(mmws_experiment_add_sweep(exp, "garbage") == MMWS_ERR_PARSE);
  CHECK(mmws_experiment_add_sweep(exp, "ppm=5000") == MMWS_ERR_ALIASING);
  int points = 0;
  CHECK(mmws_experiment_num_points(exp, &points) == MMWS_OK);
  CHECK(points == 2);

  size_t needed = 0;
  CHECK(mmws_experiment_config_json(exp, nullptr, 0, &needed) == MMWS_OK);
  REQUIRE(needed > 1);
  std::string buf(needed, '\0');
  char tiny[4];
  CHECK(mmws_experiment_config_json(exp, tiny, sizeof tiny, &needed) == MMWS_ERR_INVALID_ARGUMENT);
  CHECK(mmws_experiment_config_json(exp, buf.data(), buf.size(), &needed) == MMWS_OK);
  CHECK(buf.find("\"seed\": 42") != std::string::npos);

  const fs::path out = fs::temp_directory_path() / "mmwsync_capi_run";
  fs::remove_all(out);
  std::vector<std::string> rows;
  int diverged = -1;
  CHECK(mmws_experiment_run(exp, out.string().c_str(), collect, &rows, &diverged) == MMWS_OK);
  CHECK(diverged == 0);
  CHECK(rows.size() == 4);
  CHECK(fs::exists(out / "records.csv"));
  CHECK(fs::exists(out / "manifest.json"));

  std::vector<std::string> files;
  CHECK(mmws_figures(out.string().c_str(), (out / "figures").string().c_str(), collect, &files) ==
        MMWS_OK);
  CHECK(files.size() >= 7);
  CHECK(mmws_figures("/nonexistent/in", "/tmp/x", nullptr, nullptr) != MMWS_OK);
  mmws_experiment_destroy(exp);
  mmws_experiment_destroy(nullptr);
}

TEST_CASE("selftest through the C API", "[capi]") {
  std::vector<std::string> lines;
  int failures = -1;
  CHECK(mmws_selftest(1, collect, &lines, &failures) == MMWS_OK);
  CHECK(failures == 0);
  CHECK(lines.size() >= 6);
}

TEST_CASE("solver on caller data", "[capi]") {
  const int nrx = 4, ntx = 4, np = 64, L = 1;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> bit(0, 1);
  std::vector<double> training(2 * ntx * np);
  for (auto& v : training) v = (bit(rng) ? 1.0 : -1.0) / std::sqrt(2.0 * ntx);

  mmws_solver* s = nullptr;
  CHECK(mmws_solver_create(nrx, ntx, np, 0, training.data(), &s) == MMWS_ERR_INVALID_DIMENSION);
  CHECK(mmws_solver_create(nrx, ntx, np, L, nullptr, &s) == MMWS_ERR_INVALID_ARGUMENT);
  REQUIRE(mmws_solver_create(nrx, ntx, np, L, training.data(), &s) == MMWS_OK);
  CHECK(mmws_solver_set_options(s, 100, 1e-7, 0.0, 2, 1, 9) == MMWS_ERR_INVALID_ARGUMENT);
  CHECK(mmws_solver_set_options(s, 100, 1e-7, 0.3, 2, 1, 9) == MMWS_OK);
  CHECK(mmws_solver_set_hyperparams(s, 2.0, 0.9, 1.0, 1.0) == MMWS_ERR_INVALID_ARGUMENT);

  // y = h t^T with h = e_0: row 0 carries the first training row.
  using cd = std::complex<double>;
  std::vector<double> y(2 * nrx * np, 0.0);
  for (int n = 0; n < np; ++n) {
    const cd t(training[2 * n], training[2 * n + 1]);
    const cd v = t * std::polar(1.0, 0.05 * (n + 1));
    y[2 * n] = v.real();
    y[2 * n + 1] = v.imag();
  }
  std::vector<double> b(2 * np), c(2 * nrx * ntx * L);
  int iters = 0;
  CHECK(mmws_solver_run(s, y.data(), 0, 1e-3, b.data(), c.data(), &iters) == MMWS_OK);
  CHECK(iters > 0);
  for (double v : b) CHECK(std::isfinite(v));
  for (double v : c) CHECK(std::isfinite(v));

  size_t needed = 0;
  CHECK(mmws_solver_trace_csv(s, nullptr, 0, &needed) == MMWS_OK);
  std::string trace(needed, '\0');
  CHECK(mmws_solver_trace_csv(s, trace.data(), trace.size(), nullptr) == MMWS_OK);
  CHECK(trace.rfind("iteration,residual,damping,lambda_b,lambda_c,sigma_b2,sigma_c2", 0) == 0);

  y[0] = std::nan("");
  CHECK(mmws_solver_run(s, y.data(), 0, 1e-3, b.data(), c.data(), &iters) ==
        MMWS_ERR_INVALID_ARGUMENT);
  mmws_solver_destroy(s);
}

TEST_CASE("CFO estimate through the C API", "[capi]") {
  const int np = 64;
  const double eps = 2 * M_PI * 5 / np;
  std::vector<double> b(2 * np, 0.0);
  // On-grid tone at bin 5 has spectrum sqrt(Np) e_5 under the unitary DFT.
  b[2 * 5] = std::sqrt(double(np));
  double est = 0.0;
  CHECK(mmws_cfo_estimate(b.data(), np, 0.0, 0.0, &est) == MMWS_OK);
  CHECK(std::abs(est - eps) < 1e-6);
  CHECK(mmws_cfo_estimate(b.data(), 1, 0.0, 0.0, &est) == MMWS_ERR_INVALID_DIMENSION);
  std::vector<double> zero(2 * np, 0.0);
  CHECK(mmws_cfo_estimate(zero.data(), np, 0.0, 0.0, &est) == MMWS_ERR_ESTIMATION_FAILED);
}
