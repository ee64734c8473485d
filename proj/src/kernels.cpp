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

#include "mmwsync/kernels.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <map>
#include <vector>

#include "mmwsync/errors.hpp"

namespace mmwsync::kernels {

namespace {

Eigen::FFT<double>& thread_fft() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::Unscaled);
    return f;
  }();
  return fft;
}

void transform(std::vector<cplx>& out, const std::vector<cplx>& in,
               Direction dir) {
  auto& fft = thread_fft();
  if (dir == Direction::Forward) {
    fft.fwd(out, in);
  } else {
    fft.inv(out, in);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(in.size()));
  for (auto& v : out) v *= scale;
}

// Short transforms are cheaper as one dense product over all columns.
constexpr Eigen::Index kDenseDftMax = 32;

const cmat& cached_dft_matrix(int N) {
  thread_local std::map<int, cmat> cache;
  auto it = cache.find(N);
  if (it == cache.end()) it = cache.emplace(N, dft_matrix(N)).first;
  return it->second;
}

}  // namespace

cvec vandermonde(int N, double delta) {
  require(N >= 1, ErrorCode::InvalidDimension, "vandermonde: N must be >= 1");
  cvec a(N);
  a[0] = 1.0;
  for (int k = 1; k < N; ++k) a[k] = std::polar(1.0, k * delta);
  return a;
}

cvec dft(const cvec& x, Direction dir) {
  require(x.size() >= 1, ErrorCode::InvalidDimension, "dft: empty input");
  if (x.size() == 1) return x;
  std::vector<cplx> in(x.data(), x.data() + x.size());
  std::vector<cplx> out;
  transform(out, in, dir);
  return Eigen::Map<const cvec>(out.data(), static_cast<Eigen::Index>(out.size()));
}

cmat dft_columns(const cmat& X, Direction dir) {
  require(X.rows() >= 1, ErrorCode::InvalidDimension, "dft_columns: empty input");
  const auto n = X.rows();
  if (n == 1) return X;
  if (n <= kDenseDftMax) {
    const cmat& U = cached_dft_matrix(static_cast<int>(n));
    if (dir == Direction::Forward) return U * X;
    return U.adjoint() * X;
  }
  cmat Y(n, X.cols());
  std::vector<cplx> in(static_cast<size_t>(n));
  std::vector<cplx> out;
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    for (Eigen::Index r = 0; r < n; ++r) in[static_cast<size_t>(r)] = X(r, c);
    transform(out, in, dir);
    for (Eigen::Index r = 0; r < n; ++r) Y(r, c) = out[static_cast<size_t>(r)];
  }
  return Y;
}

cmat dft_matrix(int N) {
  require(N >= 1, ErrorCode::InvalidDimension, "dft_matrix: N must be >= 1");
  cmat U(N, N);
  const double s = 1.0 / std::sqrt(static_cast<double>(N));
  for (int m = 0; m < N; ++m) {
    for (int n = 0; n < N; ++n) {
      // Reduce the product mod N before scaling to keep the phase exact.
      const long long k = (static_cast<long long>(m) * n) % N;
      U(m, n) = std::polar(s, -2.0 * kPi * static_cast<double>(k) / N);
    }
  }
  return U;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = kPi * x;
  return std::sin(px) / px;
}

double normal_pdf(double u) {
  return std::exp(-0.5 * u * u) / std::sqrt(2.0 * kPi);
}

double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::sqrt(2.0)); }

double inverse_mills(double u) {
  if (u >= -8.0) return normal_pdf(u) / normal_cdf(u);
  // Continued fraction of the Mills ratio (1 - Phi(x)) / phi(x) at x = -u,
  // evaluated bottom-up: R = 1 / (x + 1 / (x + 2 / (x + 3 / ...))).
  const double x = -u;
  double tail = x;
  for (int k = 60; k >= 1; --k) tail = x + k / tail;
  return tail;
}

cmat circ_shift_columns(const cmat& X, int ell) {
  const auto np = static_cast<int>(X.cols());
  require(ell >= 0 && ell < np, ErrorCode::InvalidArgument,
          "circ_shift_columns: shift out of range");
  cmat Y(X.rows(), X.cols());
  for (int c = 0; c < np; ++c) Y.col(c) = X.col((c + ell) % np);
  return Y;
}

}  // namespace mmwsync::kernels
