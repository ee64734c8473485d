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

#include "mmwsync/oracle.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "mmwsync/errors.hpp"
#include "mmwsync/kernels.hpp"

namespace mmwsync::oracle {

Tensor build_tensor(int Nrx, const training::EffectiveTraining& F) {
  require(Nrx > 0 && F.F.size() > 0, ErrorCode::InvalidDimension, "build_tensor: empty problem");
  const int Np = F.Np();
  const int NtxL = static_cast<int>(F.F.rows());
  Tensor z;
  z.M = Nrx * Np;
  z.Nb = Np;
  z.Nc = Nrx * NtxL;
  const double elements = static_cast<double>(z.M) * z.Nb * z.Nc;
  if (elements > kTensorLimit)
    fail(ErrorCode::SizeGuard, "build_tensor: " + std::to_string(elements) +
                                   " elements exceed the limit of 1e6");
  const cmat G = kernels::dft_matrix(Np).adjoint();
  const cmat U = kernels::dft_matrix(Nrx);
  z.data.resize(static_cast<size_t>(elements));
  for (int m = 0; m < z.M; ++m) {
    const int n = m / Nrx;
    const int r = m % Nrx;
    for (int i = 0; i < z.Nb; ++i) {
      for (int k = 0; k < z.Nc; ++k) {
        const int col = k / Nrx;
        const int rp = k % Nrx;
        z.data[(static_cast<size_t>(m) * z.Nb + i) * z.Nc + k] = G(n, i) * F.F(col, n) * U(r, rp);
      }
    }
  }
  return z;
}

namespace {

cvec as_vec(const cmat& X) { return Eigen::Map<const cvec>(X.data(), X.size()); }
rvec as_vec(const rmat& X) { return Eigen::Map<const rvec>(X.data(), X.size()); }

}  // namespace

GenericStep generic_pbigamp_step(const pbigamp::GampState& st, const Tensor& z, const cmat& Y,
                                 const pbigamp::Hyperparams& hp, measurement::Quantizer q,
                                 double floor) {
  const cvec b = st.b_hat;
  const rvec nu_b = st.nu_b;
  const cvec c = as_vec(st.C_hat);
  const rvec nu_c = as_vec(st.nu_c);
  const cvec s_prev = as_vec(st.s_hat);
  const cvec y = as_vec(Y);
  require(b.size() == z.Nb && c.size() == z.Nc && s_prev.size() == z.M && y.size() == z.M,
          ErrorCode::DimensionMismatch, "generic_pbigamp_step: state does not match tensor");
  const int M = z.M, Nb = z.Nb, Nc = z.Nc;

  // Output-side products.
  cmat zi = cmat::Zero(M, Nb);
  cmat zk = cmat::Zero(M, Nc);
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < Nb; ++i)
      for (int k = 0; k < Nc; ++k) {
        zi(m, i) += z(m, i, k) * c(k);
        zk(m, k) += b(i) * z(m, i, k);
      }

  GenericStep out;
  out.z_bar = cvec::Zero(M);
  out.nu_p_bar = rvec::Zero(M);
  out.nu_p = rvec::Zero(M);
  for (int m = 0; m < M; ++m) {
    cplx zb = 0.0;
    double nb = 0.0;
    for (int i = 0; i < Nb; ++i) {
      zb += b(i) * zi(m, i);
      nb += nu_b(i) * std::norm(zi(m, i));
    }
    for (int k = 0; k < Nc; ++k) nb += nu_c(k) * std::norm(zk(m, k));
    double extra = 0.0;
    for (int i = 0; i < Nb; ++i) {
      double inner = 0.0;
      for (int k = 0; k < Nc; ++k) inner += nu_c(k) * std::norm(z(m, i, k));
      extra += nu_b(i) * inner;
    }
    out.z_bar(m) = zb;
    out.nu_p_bar(m) = nb;
    out.nu_p(m) = nb + extra;
  }
  out.p_hat = out.z_bar - s_prev.cwiseProduct(out.nu_p_bar.cast<cplx>());

  // Output moments.
  out.z_hat.resize(M);
  out.nu_z.resize(M);
  out.s_hat.resize(M);
  out.nu_s.resize(M);
  for (int m = 0; m < M; ++m) {
    const double nu_p = std::max(out.nu_p(m), floor);
    const auto mo = pbigamp::output_moments(y(m), out.p_hat(m), nu_p, hp.sigma2, q);
    out.z_hat(m) = mo.mean;
    out.nu_z(m) = mo.var;
    out.nu_s(m) = std::max((1.0 - mo.var / nu_p) / nu_p, floor);
    out.s_hat(m) = (mo.mean - out.p_hat(m)) / nu_p;
  }

  // Pseudo-measurements of C.
  out.r_hat.resize(Nc);
  out.nu_r.resize(Nc);
  for (int k = 0; k < Nc; ++k) {
    double prec = 0.0;
    cplx back = 0.0;
    double corr = 0.0;
    for (int m = 0; m < M; ++m) {
      prec += out.nu_s(m) * std::norm(zk(m, k));
      back += out.s_hat(m) * std::conj(zk(m, k));
      double inner = 0.0;
      for (int i = 0; i < Nb; ++i) inner += nu_b(i) * std::norm(z(m, i, k));
      corr += out.nu_s(m) * inner;
    }
    out.nu_r(k) = 1.0 / std::max(prec, floor);
    out.r_hat(k) = c(k) + out.nu_r(k) * back - out.nu_r(k) * c(k) * corr;
  }

  // Pseudo-measurements of b.
  out.q_hat.resize(Nb);
  out.nu_q.resize(Nb);
  for (int i = 0; i < Nb; ++i) {
    double prec = 0.0;
    cplx back = 0.0;
    double corr = 0.0;
    for (int m = 0; m < M; ++m) {
      prec += out.nu_s(m) * std::norm(zi(m, i));
      back += out.s_hat(m) * std::conj(zi(m, i));
      double inner = 0.0;
      for (int k = 0; k < Nc; ++k) inner += nu_c(k) * std::norm(z(m, i, k));
      corr += out.nu_s(m) * inner;
    }
    out.nu_q(i) = 1.0 / std::max(prec, floor);
    out.q_hat(i) = b(i) + out.nu_q(i) * back - out.nu_q(i) * b(i) * corr;
  }

  // Input moments.
  out.c_next.resize(Nc);
  out.nu_c_next.resize(Nc);
  for (int k = 0; k < Nc; ++k) {
    const auto m = pbigamp::input_moments_bg(out.r_hat(k), out.nu_r(k), hp.lambda_c, hp.sigma_c2);
    out.c_next(k) = m.mean;
    out.nu_c_next(k) = std::max(m.var, floor);
  }
  out.b_next.resize(Nb);
  out.nu_b_next.resize(Nb);
  for (int i = 0; i < Nb; ++i) {
    const auto m = pbigamp::input_moments_bg(out.q_hat(i), out.nu_q(i), hp.lambda_b, hp.sigma_b2);
    out.b_next(i) = m.mean;
    out.nu_b_next(i) = std::max(m.var, floor);
  }
  return out;
}

GridLsResult grid_ls_estimate(const measurement::ReceivedBlock& Y, const training::TrainingBlock& T,
                              int L, const std::vector<double>& grid) {
  require(Y.q == measurement::Quantizer::Full, ErrorCode::InvalidArgument,
          "grid_ls_estimate: needs full-resolution data");
  require(!grid.empty(), ErrorCode::InvalidArgument, "grid_ls_estimate: empty grid");
  require(L >= 1, ErrorCode::InvalidDimension, "grid_ls_estimate: L must be >= 1");
  const int Ntx = T.Ntx();
  const int Np = T.Np();
  require(Y.Y.cols() == Np, ErrorCode::DimensionMismatch, "grid_ls_estimate: Y must have Np columns");
  require(Np >= Ntx * L, ErrorCode::RankDeficient, "grid_ls_estimate: Np must be >= Ntx L");

  cmat stacked(Ntx * L, Np);
  for (int ell = 0; ell < L; ++ell)
    stacked.middleRows(ell * Ntx, Ntx) = kernels::circ_shift_columns(T.T, ell % Np);
  const cmat A = stacked.transpose();
  Eigen::ColPivHouseholderQR<cmat> qr(A);
  require(qr.rank() == Ntx * L, ErrorCode::RankDeficient,
          "grid_ls_estimate: stacked training is rank deficient");

  const double ynorm = Y.Y.norm();
  require(ynorm > 0.0, ErrorCode::DegenerateInput, "grid_ls_estimate: Y is zero");
  GridLsResult out;
  out.residual = std::numeric_limits<double>::infinity();
  cmat best_H;
  for (double eps : grid) {
    cmat Yd = Y.Y;
    for (int n = 0; n < Np; ++n) Yd.col(n) *= std::polar(1.0, -eps * (n + 1));
    const cmat Ht = qr.solve(Yd.transpose());
    const double res = (Yd - Ht.transpose() * stacked).norm() / ynorm;
    out.residuals.push_back(res);
    if (res < out.residual) {
      out.residual = res;
      out.eps_hat = eps;
      best_H = Ht.transpose();
    }
  }
  out.h_hat.taps.clear();
  for (int ell = 0; ell < L; ++ell) out.h_hat.taps.push_back(best_H.middleCols(ell * Ntx, Ntx));
  return out;
}

int support_size(const cmat& C, double rel_tol) {
  const double peak = C.cwiseAbs().maxCoeff();
  if (peak == 0.0) return 0;
  return static_cast<int>((C.cwiseAbs().array() > rel_tol * peak).count());
}

PropagationCheck cfo_propagation_check(const training::TrainingBlock& T, const cmat& C, int d) {
  const int N = T.Np();
  require(T.Ntx() == N, ErrorCode::InvalidArgument,
          "cfo_propagation_check: needs square training (Np == Ntx)");
  require(C.cols() == N, ErrorCode::DimensionMismatch,
          "cfo_propagation_check: C must have Ntx columns (L = 1)");
  const cmat U = kernels::dft_matrix(N);
  const cmat Lam = U.adjoint() * T.T * U;
  const cvec lam = Lam.diagonal();
  const double off = (Lam - cmat(lam.asDiagonal())).norm();
  require(off <= 1e-9 * Lam.norm(), ErrorCode::InvalidArgument,
          "cfo_propagation_check: training is not circulant");
  require(lam.cwiseAbs().minCoeff() > 1e-12 * lam.cwiseAbs().maxCoeff(),
          ErrorCode::RankDeficient, "cfo_propagation_check: training is singular");

  const double eps = 2.0 * kPi * d / N;
  const int shift = ((N - d) % N + N) % N;
  const cmat J = kernels::circ_shift_columns(cmat::Identity(N, N), shift);
  PropagationCheck out;
  out.C_eps = std::polar(1.0, eps) * C * lam.asDiagonal() * J * lam.cwiseInverse().asDiagonal();

  const training::EffectiveTraining F = training::assemble_F(T, 1);
  cvec d_eps(N);
  for (int n = 0; n < N; ++n) d_eps(n) = std::polar(1.0, eps * (n + 1));
  const cvec b_eps = kernels::dft(d_eps, kernels::Direction::Forward);
  const cvec b_zero = kernels::dft(cvec::Ones(N), kernels::Direction::Forward);
  const cmat Z = measurement::forward_factored({C, N, 1}, F, b_eps);
  const cmat Z0 = measurement::forward_factored({out.C_eps, N, 1}, F, b_zero);
  const double zn = Z.norm();
  out.residual = zn > 0.0 ? (Z - Z0).norm() / zn : (Z - Z0).norm();
  out.nnz_before = support_size(C);
  out.nnz_after = support_size(out.C_eps);
  return out;
}

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kInf = std::numeric_limits<double>::infinity();

template <typename Fn>
double integrate(Fn f, std::vector<double> breaks) {
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  double total = 0.0, err_sum = 0.0, l1_sum = 0.0;
  for (size_t j = 0; j + 1 < breaks.size(); ++j) {
    double err = 0.0;
    double l1 = 0.0;
    total += gauss_kronrod<double, 61>::integrate(f, breaks[j], breaks[j + 1], 20, 1e-13, &err,
                                                  &l1);
    err_sum += err;
    l1_sum += l1;
  }
  if (!(err_sum <= 1e-8 * l1_sum) && err_sum > 1e-300)
    fail(ErrorCode::NonConvergent, "quadrature did not reach tolerance");
  return total;
}

double log_gauss(double x, double mu, double var) {
  return -0.5 * (x - mu) * (x - mu) / var - 0.5 * std::log(2.0 * kPi * var);
}

double log_normal_cdf(double t) {
  if (t > -30.0) return std::log(kernels::normal_cdf(t));
  return -0.5 * t * t - std::log(-t) - 0.5 * std::log(2.0 * kPi);
}

struct RailMoments {
  double log_mass;
  double mean;
  double var;
};

// Moments of exp(logw(x)) N(x; mu, v) on the support [lo, hi]. logw must be
// concave so the integrand is unimodal.
template <typename LogW>
RailMoments rail_moments(LogW logw, double mu, double v, double lo, double hi,
                         std::initializer_list<double> anchors) {
  auto logd = [&](double x) { return logw(x) + log_gauss(x, mu, v); };
  const double sd = std::sqrt(v);
  double a = mu, b = mu;
  for (double x : anchors) {
    a = std::min(a, x);
    b = std::max(b, x);
  }
  a = std::max(a - 20.0 * sd, lo);
  b = std::min(b + 20.0 * sd, hi);

  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = logd(x1), f2 = logd(x2);
  for (int it = 0; it < 300 && b - a > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = logd(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = logd(x1);
    }
  }
  const double mode = f1 >= f2 ? x1 : x2;
  const double peak = logd(mode);
  require(std::isfinite(peak), ErrorCode::NonConvergent, "quadrature: zero normalizer");

  // Point on one side of the mode where the log density has dropped by `drop`.
  auto edge = [&](double dir, double drop) {
    const double bound = dir < 0 ? lo : hi;
    double inner = mode, step = sd;
    double outer = mode + dir * step;
    while (true) {
      if ((dir < 0 && outer <= bound) || (dir > 0 && outer >= bound)) {
        outer = bound;
        if (!std::isfinite(bound) || logd(bound) >= peak - drop) return bound;
        break;
      }
      if (logd(outer) < peak - drop) break;
      inner = outer;
      step *= 2.0;
      outer = mode + dir * step;
    }
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (inner + outer);
      if (logd(m) >= peak - drop) inner = m; else outer = m;
    }
    return outer;
  };
  const double left = edge(-1.0, 80.0), right = edge(1.0, 80.0);
  const double hl = mode - edge(-1.0, 0.5), hr = edge(1.0, 0.5) - mode;
  std::vector<double> breaks{left, mode, right};
  for (double k : {1.0, 2.0, 4.0, 8.0}) {
    if (mode - k * hl > left) breaks.push_back(mode - k * hl);
    if (mode + k * hr < right) breaks.push_back(mode + k * hr);
  }

  auto dens = [&](double x) { return std::exp(logd(x) - peak); };
  const double mass = integrate(dens, breaks);
  require(mass > 0.0, ErrorCode::NonConvergent, "quadrature: zero normalizer");
  const double mean = integrate([&](double x) { return x * dens(x); }, breaks) / mass;
  const double var =
      integrate([&](double x) { return (x - mean) * (x - mean) * dens(x); }, breaks) / mass;
  return {peak + std::log(mass), mean, var};
}

}  // namespace

pbigamp::Moments quadrature_output_moments(cplx y, cplx p_hat, double nu_p, double sigma2,
                                           measurement::Quantizer q) {
  require(nu_p > 0.0 && sigma2 >= 0.0, ErrorCode::InvalidArgument,
          "quadrature_output_moments: invalid variances");
  const double v = nu_p / 2.0;
  const double w = sigma2 / 2.0;
  auto rail = [&](double yr, double mu) -> RailMoments {
    if (q == measurement::Quantizer::Full) {
      if (w == 0.0) return {0.0, yr, 0.0};
      auto lik = [&](double x) { return log_gauss(yr, x, w); };
      return rail_moments(lik, mu, v, -kInf, kInf, {yr});
    }
    const double s = yr >= 0.0 ? 1.0 : -1.0;
    if (w == 0.0) {
      auto flat = [](double) { return 0.0; };
      return s > 0 ? rail_moments(flat, mu, v, 0.0, kInf, {0.0})
                   : rail_moments(flat, mu, v, -kInf, 0.0, {0.0});
    }
    const double sw = std::sqrt(w);
    auto probit = [&](double x) { return log_normal_cdf(s * x / sw); };
    return rail_moments(probit, mu, v, -kInf, kInf, {0.0});
  };
  const RailMoments re = rail(y.real(), p_hat.real());
  const RailMoments im = rail(y.imag(), p_hat.imag());
  return {{re.mean, im.mean}, re.var + im.var};
}

pbigamp::InputMoments quadrature_input_moments_bg(cplx r_hat, double nu_r, double lambda,
                                                  double sigma_x2) {
  require(nu_r > 0.0 && sigma_x2 > 0.0 && lambda >= 0.0 && lambda <= 1.0,
          ErrorCode::InvalidArgument, "quadrature_input_moments_bg: invalid parameters");
  pbigamp::InputMoments out;
  if (lambda >= 1.0) return out;
  const double v = sigma_x2 / 2.0;
  const double w = nu_r / 2.0;
  auto rail = [&](double r) {
    auto lik = [&](double x) { return log_gauss(r, x, w); };
    return rail_moments(lik, 0.0, v, -kInf, kInf, {r});
  };
  const RailMoments re = rail(r_hat.real());
  const RailMoments im = rail(r_hat.imag());
  const double log_active = std::log1p(-lambda) + re.log_mass + im.log_mass;
  const double log_inactive = std::log(lambda) + log_gauss(r_hat.real(), 0.0, w) +
                              log_gauss(r_hat.imag(), 0.0, w);
  out.pi = 1.0 / (1.0 + std::exp(log_inactive - log_active));
  out.active_mean = {re.mean, im.mean};
  out.active_var = re.var + im.var;
  out.mean = out.pi * out.active_mean;
  out.var = out.pi * (out.active_var + std::norm(out.active_mean)) - std::norm(out.mean);
  return out;
}

}  // namespace mmwsync::oracle

namespace mmwsync::oracle {

pbigamp::GampState random_state(const Dims& dims, Rng& rng) {
  require(dims.valid(), ErrorCode::InvalidDimension, "random_state: invalid dims");
  std::uniform_real_distribution<double> pos(0.1, 1.0);
  const int NtxL = dims.Ntx * dims.L;
  pbigamp::GampState st;
  st.b_hat.resize(dims.Np);
  st.nu_b.resize(dims.Np);
  for (int i = 0; i < dims.Np; ++i) {
    st.b_hat(i) = complex_normal(rng);
    st.nu_b(i) = pos(rng);
  }
  st.C_hat.resize(dims.Nrx, NtxL);
  st.nu_c.resize(dims.Nrx, NtxL);
  for (int c = 0; c < NtxL; ++c)
    for (int r = 0; r < dims.Nrx; ++r) {
      st.C_hat(r, c) = complex_normal(rng);
      st.nu_c(r, c) = pos(rng);
    }
  st.s_hat.resize(dims.Nrx, dims.Np);
  st.nu_s.resize(dims.Nrx, dims.Np);
  for (int n = 0; n < dims.Np; ++n)
    for (int r = 0; r < dims.Nrx; ++r) {
      st.s_hat(r, n) = complex_normal(rng, 0.1);
      st.nu_s(r, n) = pos(rng);
    }
  st.t = 1;
  return st;
}

namespace {

template <typename A, typename B>
void track(StepDiscrepancy& d, const char* name, const A& fast, const B& generic) {
  const auto f = Eigen::Map<const Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, 1>>(
      fast.data(), fast.size());
  const double ref = generic.norm();
  const double err = (f - generic).norm();
  const double rel = ref > 0.0 ? err / ref : err;
  if (!(rel <= d.max_rel)) {
    d.max_rel = rel;
    d.worst = name;
  }
}

}  // namespace

StepDiscrepancy compare_steps(const pbigamp::StepResult& fast, const GenericStep& g) {
  StepDiscrepancy d;
  track(d, "z_bar", fast.p.z_bar, g.z_bar);
  track(d, "nu_p_bar", fast.p.nu_p_bar, g.nu_p_bar);
  track(d, "nu_p", fast.p.nu_p, g.nu_p);
  track(d, "p_hat", fast.p.p_hat, g.p_hat);
  track(d, "z_hat", fast.z_hat, g.z_hat);
  track(d, "nu_z", fast.nu_z, g.nu_z);
  track(d, "s_hat", fast.s_hat, g.s_hat);
  track(d, "nu_s", fast.nu_s, g.nu_s);
  track(d, "r_hat", fast.rq.r_hat, g.r_hat);
  track(d, "nu_r", fast.rq.nu_r, g.nu_r);
  track(d, "q_hat", fast.rq.q_hat, g.q_hat);
  track(d, "nu_q", fast.rq.nu_q, g.nu_q);
  track(d, "c_next", fast.C_next, g.c_next);
  track(d, "nu_c_next", fast.nu_c_next, g.nu_c_next);
  track(d, "b_next", fast.b_next, g.b_next);
  track(d, "nu_b_next", fast.nu_b_next, g.nu_b_next);
  return d;
}

}  // namespace mmwsync::oracle
