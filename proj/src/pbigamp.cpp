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

#include "mmwsync/pbigamp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "mmwsync/errors.hpp"
#include "mmwsync/kernels.hpp"

namespace mmwsync::pbigamp {

using kernels::Direction;
using measurement::Quantizer;

void Hyperparams::validate() const {
  require(lambda_b >= 0.0 && lambda_b < 1.0 && lambda_c >= 0.0 && lambda_c < 1.0,
          ErrorCode::InvalidArgument, "Hyperparams: lambda must lie in [0, 1)");
  require(sigma_b2 > 0.0 && sigma_c2 > 0.0, ErrorCode::InvalidArgument,
          "Hyperparams: active variances must be positive");
  require(sigma2 >= 0.0 && std::isfinite(sigma2), ErrorCode::InvalidArgument,
          "Hyperparams: sigma2 must be finite and >= 0");
}

Hyperparams Hyperparams::defaults(const Dims& dims, double sigma2) {
  require(dims.valid(), ErrorCode::InvalidDimension, "Hyperparams::defaults: invalid dims");
  Hyperparams hp;
  hp.lambda_b = 0.99;
  hp.lambda_c = 0.95;
  hp.sigma_b2 = 1.0 / (1.0 - hp.lambda_b);
  hp.sigma_c2 = 1.0 / ((1.0 - hp.lambda_c) * dims.L);
  hp.sigma2 = sigma2;
  return hp;
}

void GampConfig::validate() const {
  require(t_max >= 1, ErrorCode::InvalidArgument, "GampConfig: t_max must be >= 1");
  require(tau_stop > 0.0, ErrorCode::InvalidArgument, "GampConfig: tau_stop must be > 0");
  require(damping > 0.0 && damping <= 1.0, ErrorCode::InvalidArgument,
          "GampConfig: damping must lie in (0, 1]");
  require(em_outer_iters >= 1, ErrorCode::InvalidArgument,
          "GampConfig: em_outer_iters must be >= 1");
  require(restarts >= 0, ErrorCode::InvalidArgument, "GampConfig: restarts must be >= 0");
  require(modulus_spread_max >= 0.0, ErrorCode::InvalidArgument,
          "GampConfig: modulus_spread_max must be >= 0");
  require(variance_floor > 0.0, ErrorCode::InvalidArgument,
          "GampConfig: variance_floor must be > 0");
}

Operator::Operator(int Nrx, const training::EffectiveTraining& F)
    : dims_{Nrx, F.Ntx, F.L, F.Np()}, F_(F.F), F_abs2_(F.F.cwiseAbs2()) {
  require(dims_.valid(), ErrorCode::InvalidDimension, "Operator: invalid dimensions");
  require(F.F.rows() == static_cast<Eigen::Index>(F.Ntx) * F.L, ErrorCode::DimensionMismatch,
          "Operator: F must have Ntx L rows");
}

GampState GampState::initialize(const Dims& dims, const Hyperparams& hp, Rng& rng) {
  require(dims.valid(), ErrorCode::InvalidDimension, "GampState::initialize: invalid dims");
  hp.validate();
  const int NtxL = dims.Ntx * dims.L;
  GampState st;
  st.b_hat = cvec::Zero(dims.Np);
  st.b_hat(0) = std::sqrt(static_cast<double>(dims.Np));
  st.nu_b = rvec::Constant(dims.Np, (1.0 - hp.lambda_b) * hp.sigma_b2);

  const double vc = (1.0 - hp.lambda_c) * hp.sigma_c2;
  st.C_hat.resize(dims.Nrx, NtxL);
  for (int c = 0; c < NtxL; ++c)
    for (int r = 0; r < dims.Nrx; ++r) st.C_hat(r, c) = complex_normal(rng, vc);
  st.nu_c = rmat::Constant(dims.Nrx, NtxL, vc);

  st.s_hat = cmat::Zero(dims.Nrx, dims.Np);
  st.nu_s = rmat::Zero(dims.Nrx, dims.Np);
  st.t = 0;
  return st;
}

PStage compute_p_stage(const Operator& op, const GampState& st) {
  const Dims& d = op.dims();
  require(st.C_hat.rows() == d.Nrx && st.C_hat.cols() == op.F().rows() &&
              st.b_hat.size() == d.Np && st.s_hat.rows() == d.Nrx && st.s_hat.cols() == d.Np,
          ErrorCode::DimensionMismatch, "compute_p_stage: state does not match operator");
  PStage out;
  out.X = kernels::dft_columns(st.C_hat * op.F(), Direction::Forward);
  out.d_hat = kernels::dft(st.b_hat, Direction::Inverse);
  out.z_bar = out.X * out.d_hat.asDiagonal();

  const double sb = st.nu_b.sum() / d.Np;
  const rvec mu_c = st.nu_c.colwise().mean().transpose();
  const rvec d_abs2 = out.d_hat.cwiseAbs2();
  // mu_c^T |F diag(d)|^2 and mu_c^T |F|^2, one value per column n.
  const rvec fh_term = (mu_c.transpose() * op.F_abs2()).transpose().cwiseProduct(d_abs2);
  const rvec f_term = (mu_c.transpose() * op.F_abs2()).transpose();

  out.nu_p_bar = sb * out.X.cwiseAbs2();
  out.nu_p_bar.rowwise() += fh_term.transpose();
  out.nu_p = out.nu_p_bar;
  out.nu_p.rowwise() += (sb * f_term).transpose();
  out.p_hat = out.z_bar - st.s_hat.cwiseProduct(out.nu_p_bar.cast<cplx>());
  return out;
}

RQStage compute_rq_stage(const Operator& op, const GampState& st, const PStage& p,
                         double floor) {
  const Dims& d = op.dims();
  require(st.s_hat.rows() == d.Nrx && st.s_hat.cols() == d.Np && st.nu_s.rows() == d.Nrx &&
              st.nu_s.cols() == d.Np,
          ErrorCode::DimensionMismatch, "compute_rq_stage: s has the wrong shape");
  const int NtxL = static_cast<int>(op.F().rows());
  const double sb = st.nu_b.sum() / d.Np;
  const rvec mu_c = st.nu_c.colwise().mean().transpose();
  const rvec mu_z = st.nu_s.colwise().mean().transpose();
  const rvec d_abs2 = p.d_hat.cwiseAbs2();
  const cmat Fh = op.F() * p.d_hat.asDiagonal();

  RQStage out;
  // One precision per column of C.
  const rvec prec_r = op.F_abs2() * d_abs2.cwiseProduct(mu_z);
  const rvec f_mu_z = op.F_abs2() * mu_z;
  out.nu_r.resize(d.Nrx, NtxL);
  for (int c = 0; c < NtxL; ++c) out.nu_r.col(c).setConstant(1.0 / std::max(prec_r(c), floor));

  const cmat back = kernels::dft_columns(st.s_hat, Direction::Inverse) * Fh.adjoint();
  out.r_hat.resize(d.Nrx, NtxL);
  for (int c = 0; c < NtxL; ++c) {
    const double corr = sb * f_mu_z(c);
    for (int r = 0; r < d.Nrx; ++r) {
      const double nr = out.nu_r(r, c);
      out.r_hat(r, c) = st.C_hat(r, c) + nr * back(r, c) - nr * st.C_hat(r, c) * corr;
    }
  }

  // Identical for every entry of b.
  const double prec_q = st.nu_s.cwiseProduct(p.X.cwiseAbs2()).sum() / d.Np;
  const double nq = 1.0 / std::max(prec_q, floor);
  out.nu_q = rvec::Constant(d.Np, nq);

  cvec g(d.Np);
  for (int n = 0; n < d.Np; ++n) g(n) = p.X.col(n).dot(st.s_hat.col(n));
  const cvec Ug = kernels::dft(g, Direction::Forward);
  const double third =
      static_cast<double>(d.Nrx) / d.Np * mu_c.dot(op.F_abs2() * mu_z);
  out.q_hat = st.b_hat + nq * Ug - nq * third * st.b_hat;
  return out;
}

namespace {

struct OutputStage {
  cmat z_hat;
  rmat nu_z;
  cmat s_hat;
  rmat nu_s;
};

OutputStage output_stage(const cmat& Y, const PStage& p, double sigma2, Quantizer q,
                         double floor) {
  require(Y.rows() == p.p_hat.rows() && Y.cols() == p.p_hat.cols(),
          ErrorCode::DimensionMismatch, "PBiGAMP: Y has the wrong shape");
  OutputStage out;
  out.z_hat.resize(Y.rows(), Y.cols());
  out.nu_z.resize(Y.rows(), Y.cols());
  out.s_hat.resize(Y.rows(), Y.cols());
  out.nu_s.resize(Y.rows(), Y.cols());
  for (Eigen::Index n = 0; n < Y.cols(); ++n) {
    for (Eigen::Index r = 0; r < Y.rows(); ++r) {
      const double nu_p = std::max(p.nu_p(r, n), floor);
      const Moments m = output_moments(Y(r, n), p.p_hat(r, n), nu_p, sigma2, q);
      out.z_hat(r, n) = m.mean;
      out.nu_z(r, n) = m.var;
      out.s_hat(r, n) = (m.mean - p.p_hat(r, n)) / nu_p;
      out.nu_s(r, n) = std::max((1.0 - m.var / nu_p) / nu_p, floor);
    }
  }
  return out;
}

struct InputStageC {
  cmat mean;
  rmat var;
  rmat pi;
  cmat active_mean;
  rmat active_var;
};

struct InputStageB {
  cvec mean;
  rvec var;
  rvec pi;
  cvec active_mean;
  rvec active_var;
};

InputStageC input_stage_c(const RQStage& rq, const Hyperparams& hp, double floor) {
  InputStageC out;
  const auto rows = rq.r_hat.rows();
  const auto cols = rq.r_hat.cols();
  out.mean.resize(rows, cols);
  out.var.resize(rows, cols);
  out.pi.resize(rows, cols);
  out.active_mean.resize(rows, cols);
  out.active_var.resize(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const InputMoments m = input_moments_bg(rq.r_hat(r, c), rq.nu_r(r, c), hp.lambda_c,
                                              hp.sigma_c2);
      out.mean(r, c) = m.mean;
      out.var(r, c) = std::max(m.var, floor);
      out.pi(r, c) = m.pi;
      out.active_mean(r, c) = m.active_mean;
      out.active_var(r, c) = m.active_var;
    }
  }
  return out;
}

InputStageB input_stage_b(const RQStage& rq, const Hyperparams& hp, double floor) {
  InputStageB out;
  const auto n = rq.q_hat.size();
  out.mean.resize(n);
  out.var.resize(n);
  out.pi.resize(n);
  out.active_mean.resize(n);
  out.active_var.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const InputMoments m = input_moments_bg(rq.q_hat(i), rq.nu_q(i), hp.lambda_b, hp.sigma_b2);
    out.mean(i) = m.mean;
    out.var(i) = std::max(m.var, floor);
    out.pi(i) = m.pi;
    out.active_mean(i) = m.active_mean;
    out.active_var(i) = m.active_var;
  }
  return out;
}

template <typename M>
M blend(const M& fresh, const M& old, double delta) {
  return delta * fresh + (1.0 - delta) * old;
}

bool finite(const GampState& st) {
  return st.b_hat.allFinite() && st.C_hat.allFinite() && st.nu_b.allFinite() &&
         st.nu_c.allFinite() && st.s_hat.allFinite() && st.nu_s.allFinite();
}

struct NonFinite {};

}  // namespace

StepResult fast_step(const Operator& op, const GampState& st, const cmat& Y,
                     const Hyperparams& hp, Quantizer q, double floor) {
  StepResult out;
  out.p = compute_p_stage(op, st);
  OutputStage os = output_stage(Y, out.p, hp.sigma2, q, floor);
  out.z_hat = std::move(os.z_hat);
  out.nu_z = std::move(os.nu_z);
  out.s_hat = std::move(os.s_hat);
  out.nu_s = std::move(os.nu_s);

  GampState next = st;
  next.s_hat = out.s_hat;
  next.nu_s = out.nu_s;
  out.rq = compute_rq_stage(op, next, out.p, floor);

  InputStageC ic = input_stage_c(out.rq, hp, floor);
  InputStageB ib = input_stage_b(out.rq, hp, floor);
  out.C_next = std::move(ic.mean);
  out.nu_c_next = std::move(ic.var);
  out.b_next = std::move(ib.mean);
  out.nu_b_next = std::move(ib.var);
  return out;
}

Hyperparams em_update(const GampState& st, const Hyperparams& hp) {
  require(st.pi_b.size() > 0 && st.pi_c.size() > 0, ErrorCode::InvalidArgument,
          "em_update: no activity posteriors in state");
  Hyperparams out = hp;

  const double sum_pb = st.pi_b.sum();
  out.lambda_b = 1.0 - sum_pb / static_cast<double>(st.pi_b.size());
  if (sum_pb > 0.0) {
    const double num = st.pi_b.cwiseProduct(st.active_var_b + st.active_mean_b.cwiseAbs2()).sum();
    out.sigma_b2 = num / sum_pb;
  }

  const double sum_pc = st.pi_c.sum();
  out.lambda_c = 1.0 - sum_pc / static_cast<double>(st.pi_c.size());
  if (sum_pc > 0.0) {
    const double num = st.pi_c.cwiseProduct(st.active_var_c + st.active_mean_c.cwiseAbs2()).sum();
    out.sigma_c2 = num / sum_pc;
  }
  return out;
}

namespace {

// Keeps the learned priors usable: at least one expected active entry and a
// strictly positive active variance.
Hyperparams sanitize(Hyperparams hp, const Dims& d) {
  hp.lambda_b = std::clamp(hp.lambda_b, 0.0, 1.0 - 1.0 / d.num_b());
  hp.lambda_c = std::clamp(hp.lambda_c, 0.0, 1.0 - 1.0 / d.num_c());
  hp.sigma_b2 = std::max(hp.sigma_b2, 1e-12);
  hp.sigma_c2 = std::max(hp.sigma_c2, 1e-12);
  return hp;
}

bool hp_settled(const Hyperparams& a, const Hyperparams& b) {
  auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-12); };
  return rel(a.lambda_b, b.lambda_b) < 1e-6 && rel(a.lambda_c, b.lambda_c) < 1e-6 &&
         rel(a.sigma_b2, b.sigma_b2) < 1e-6 && rel(a.sigma_c2, b.sigma_c2) < 1e-6;
}

struct Attempt {
  GampState st;
  Hyperparams hp;
  std::vector<TraceRow> trace;
  int iterations = 0;
  bool converged = false;
};

Attempt run_attempt(const Operator& op, const measurement::ReceivedBlock& Y, Hyperparams hp,
                    const GampConfig& cfg, Rng& rng) {
  const double floor = cfg.variance_floor;
  const double delta = cfg.damping;
  Attempt a;
  a.st = GampState::initialize(op.dims(), hp, rng);
  GampState& st = a.st;
  bool have_prev_z = false;

  for (int em = 0; em < cfg.em_outer_iters; ++em) {
    bool inner_converged = false;
    for (int t = 1; t <= cfg.t_max; ++t) {
      const bool fresh = st.t == 0;
      PStage p = compute_p_stage(op, st);
      OutputStage os = output_stage(Y.Y, p, hp.sigma2, Y.q, floor);

      if (fresh) {
        st.s_hat = os.s_hat;
        st.nu_s = os.nu_s;
      } else {
        st.s_hat = blend(os.s_hat, st.s_hat, delta);
        st.nu_s = blend(os.nu_s, st.nu_s, delta);
      }
      RQStage rq = compute_rq_stage(op, st, p, floor);
      InputStageC ic = input_stage_c(rq, hp, floor);
      InputStageB ib = input_stage_b(rq, hp, floor);

      st.C_hat = blend(ic.mean, st.C_hat, delta);
      st.nu_c = blend(ic.var, st.nu_c, delta);
      st.b_hat = blend(ib.mean, st.b_hat, delta);
      st.nu_b = blend(ib.var, st.nu_b, delta);

      st.pi_c = std::move(ic.pi);
      st.active_mean_c = std::move(ic.active_mean);
      st.active_var_c = std::move(ic.active_var);
      st.pi_b = std::move(ib.pi);
      st.active_mean_b = std::move(ib.active_mean);
      st.active_var_b = std::move(ib.active_var);

      double residual = 1.0;
      if (have_prev_z) {
        const double energy = p.z_bar.squaredNorm();
        const double diff = (p.z_bar - st.z_bar).squaredNorm();
        residual = energy > 0.0 ? diff / energy : (diff > 0.0 ? 1.0 : 0.0);
      }
      st.p_hat = std::move(p.p_hat);
      st.nu_p = std::move(p.nu_p);
      st.nu_p_bar = std::move(p.nu_p_bar);
      st.z_bar = std::move(p.z_bar);
      st.z_hat = std::move(os.z_hat);
      st.nu_z = std::move(os.nu_z);
      st.r_hat = std::move(rq.r_hat);
      st.nu_r = std::move(rq.nu_r);
      st.q_hat = std::move(rq.q_hat);
      st.nu_q = std::move(rq.nu_q);
      have_prev_z = true;
      ++st.t;
      ++a.iterations;

      if (!finite(st) || !st.z_bar.allFinite()) throw NonFinite{};
      a.trace.push_back({st.t, em, residual, delta, hp.lambda_b, hp.lambda_c, hp.sigma_b2,
                         hp.sigma_c2});
      if (residual <= cfg.tau_stop) {
        inner_converged = true;
        break;
      }
    }
    a.converged = inner_converged;
    if (!cfg.learn_hyperparams || em + 1 == cfg.em_outer_iters) break;
    const Hyperparams next = sanitize(em_update(st, hp), op.dims());
    if (!std::isfinite(next.lambda_b) || !std::isfinite(next.lambda_c) ||
        !std::isfinite(next.sigma_b2) || !std::isfinite(next.sigma_c2))
      throw NonFinite{};
    const bool settled = hp_settled(next, hp);
    hp = next;
    if (settled) break;
  }
  a.hp = hp;
  return a;
}

}  // namespace

RunResult run(const measurement::ReceivedBlock& Y, const training::EffectiveTraining& F,
              const Hyperparams& hp, const GampConfig& cfg) {
  hp.validate();
  cfg.validate();
  const Operator op(static_cast<int>(Y.Y.rows()), F);
  require(Y.Y.cols() == op.dims().Np, ErrorCode::DimensionMismatch,
          "run: Y must have Np columns");
  require(Y.Y.allFinite(), ErrorCode::InvalidArgument, "run: Y contains non-finite entries");

  RunResult best;
  double best_spread = std::numeric_limits<double>::infinity();
  bool have = false;
  for (int attempt = 0; attempt <= cfg.restarts; ++attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.init_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(cfg.init_seed >> 32),
                      static_cast<std::uint32_t>(attempt)};
    Rng rng(seq);
    try {
      Attempt a = run_attempt(op, Y, hp, cfg, rng);
      const double spread = modulus_spread(a.st.b_hat);
      if (!have || spread < best_spread) {
        best.b_hat = std::move(a.st.b_hat);
        best.C_hat = std::move(a.st.C_hat);
        best.hp = a.hp;
        best.trace = std::move(a.trace);
        best.iterations = a.iterations;
        best.converged = a.converged;
        best_spread = spread;
        have = true;
      }
      best.restarts_used = attempt;
      if (best_spread <= cfg.modulus_spread_max) break;
    } catch (const NonFinite&) {
    }
  }
  if (have) return best;
  fail(ErrorCode::Divergence, "PBiGAMP diverged: non-finite state after " +
                                  std::to_string(cfg.restarts + 1) + " attempts");
}

double modulus_spread(const cvec& b_hat) {
  const rvec a = kernels::dft(b_hat, kernels::Direction::Inverse).cwiseAbs();
  const double m = a.mean();
  if (!(m > 0.0)) return std::numeric_limits<double>::infinity();
  return ((a.array() / m) - 1.0).square().mean();
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "iteration,residual,damping,lambda_b,lambda_c,sigma_b2,sigma_c2,em_iteration\n";
  os.precision(17);
  for (const auto& r : trace) {
    os << r.iteration << ',' << r.residual << ',' << r.damping << ',' << r.lambda_b << ','
       << r.lambda_c << ',' << r.sigma_b2 << ',' << r.sigma_c2 << ',' << r.em_iteration << '\n';
  }
}

}  // namespace mmwsync::pbigamp
