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

#pragma once

#include "mmwsync/types.hpp"

namespace mmwsync::kernels {

// Unitary DFT with U_N[m,n] = exp(-j 2 pi m n / N) / sqrt(N) (0-based).
// Forward applies U_N, Inverse applies U_N^H.
enum class Direction { Forward, Inverse };

/// Array response [1, e^{j delta}, ..., e^{j (N-1) delta}]^T.
cvec vandermonde(int N, double delta);

cvec dft(const cvec& x, Direction dir);

/// Applies the unitary DFT to every column of X (U_N X or U_N^H X with
/// N = X.rows()).
cmat dft_columns(const cmat& X, Direction dir);

/// Dense U_N built from its definition. Only for tests and the oracle.
cmat dft_matrix(int N);

/// Normalized sinc, sin(pi x) / (pi x), with sinc(0) = 1.
double sinc(double x);

double normal_pdf(double u);
double normal_cdf(double u);

/// phi(u) / Phi(u), stable for large negative u where Phi underflows.
double inverse_mills(double u);

/// X * J_ell: output column c is input column (c + ell) mod Np.
cmat circ_shift_columns(const cmat& X, int ell);

}  // namespace mmwsync::kernels
