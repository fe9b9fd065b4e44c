#pragma once

// Closed-form mean and mean-square behavior of the asynchronous multitask
// recursion. Every (NL)^2-sized object is indexed by bvec with L x L blocks.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mtdiff/activation.hpp"
#include "mtdiff/block_linalg.hpp"
#include "mtdiff/diffusion.hpp"
#include "mtdiff/error.hpp"
#include "mtdiff/network.hpp"

namespace mtdiff {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Largest NL accepted by the mean-square analysis unless the caller raises it.
/// F has (NL)^4 entries: 64 gives 128 MiB.
inline constexpr Index kDefaultMaxTheoryDim = 64;

/// Matrices up to this size get a full eigendecomposition; larger ones use
/// power iteration.
inline constexpr Index kDenseEigenLimit = 2048;

inline double spectral_radius_power(const MatrixXd& m, double tol = 1e-10, int max_iter = 10000) {
  // Power iteration on m^2 copes with a dominant real pair of opposite sign.
  // A dominant complex pair never settles; the geometric mean growth over the
  // second half of the iterations is returned instead.
  VectorXd v = VectorXd::Ones(m.cols()) / std::sqrt(static_cast<double>(m.cols()));
  double prev = 0.0, log_growth = 0.0;
  int counted = 0;
  for (int it = 0; it < max_iter; ++it) {
    const VectorXd w = m * (m * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    const double est = std::sqrt(nw);
    v = w / nw;
    if (std::abs(est - prev) <= tol * std::max(1.0, est)) return est;
    prev = est;
    if (2 * it >= max_iter) {
      log_growth += std::log(nw);
      ++counted;
    }
  }
  return counted ? std::exp(log_growth / (2.0 * counted)) : prev;
}

inline double spectral_radius(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "spectral radius of a non-square matrix");
  if (m.rows() == 0) return 0.0;
  if (m.rows() > kDenseEigenLimit) return spectral_radius_power(m);
  Eigen::EigenSolver<MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace detail {

inline MatrixXd lift(const MatrixXd& x, Index l) { return kron(x, MatrixXd::Identity(l, l)); }

inline MatrixXd block_diag(const std::vector<MatrixXd>& blocks, Index l) {
  const auto n = static_cast<Index>(blocks.size());
  MatrixXd out = MatrixXd::Zero(n * l, n * l);
  for (Index k = 0; k < n; ++k) out.block(k * l, k * l, l, l) = blocks[static_cast<std::size_t>(k)];
  return out;
}

/// Solves a x = b and checks the residual.
inline VectorXd checked_solve(const MatrixXd& a, const VectorXd& b, ErrorCode on_fail, const char* what) {
  VectorXd x = a.partialPivLu().solve(b);
  const double scale = std::max(b.norm(), std::numeric_limits<double>::min());
  if (!x.allFinite() || (a * x - b).norm() > 1e-10 * scale) {
    x = a.fullPivLu().solve(b);
    if (!x.allFinite() || (a * x - b).norm() > 1e-10 * scale)
      throw Error(on_fail, std::string(what) + ": linear solve residual above tolerance");
  }
  return x;
}

inline void check_model(const MomentSet& ms, const SignalModel& model) {
  if (ms.nodes() != model.nodes() || ms.mean_A.rows() != ms.nodes() || ms.mean_P.rows() != ms.nodes())
    throw Error(ErrorCode::DimensionMismatch, "moment set and signal model disagree on N");
}

}  // namespace detail

struct MeanArtifacts {
  MatrixXd B;  // E B(i)
  VectorXd r;  // E r(i)
  MatrixXd Q;  // I - P̄ ⊗ I_L
  MatrixXd D;  // block-diag(R_k) + eta Q, the curvature seen by each step
  VectorXd mean_step;
  double eta = 0.0;
  double rho = 0.0;
  std::optional<VectorXd> asymptotic_bias;  // lim E w̃(i), present iff rho < 1

  bool stable() const noexcept { return rho < 1.0; }
  const VectorXd& bias() const {
    if (!asymptotic_bias) throw Error(ErrorCode::UnstableMean, "mean recursion is unstable: rho(B) = " + std::to_string(rho));
    return *asymptotic_bias;
  }
};

inline MeanArtifacts mean_artifacts(const MomentSet& ms, const SignalModel& model, double eta) {
  detail::check_model(ms, model);
  const Index n = ms.nodes(), l = model.dim(), nl = n * l;
  MeanArtifacts ma;
  ma.eta = eta;
  ma.mean_step = ms.mean_step;
  const MatrixXd abar = detail::lift(ms.mean_A, l);
  ma.Q = MatrixXd::Identity(nl, nl) - detail::lift(ms.mean_P, l);
  ma.D = detail::block_diag(model.regressor_cov, l) + eta * ma.Q;
  const VectorXd mdiag = ms.mean_step.replicate(1, l).transpose().reshaped();
  const MatrixXd md = mdiag.asDiagonal() * ma.D;
  ma.B = abar.transpose() * (MatrixXd::Identity(nl, nl) - md);
  ma.r = abar.transpose() * (mdiag.asDiagonal() * (ma.Q * model.optimum));
  ma.rho = spectral_radius(ma.B);
  if (ma.stable())
    ma.asymptotic_bias =
        eta * detail::checked_solve(MatrixXd::Identity(nl, nl) - ma.B, ma.r, ErrorCode::UnstableMean, "bias");
  return ma;
}

/// Largest eigenvalue over the node covariances.
inline double max_covariance_radius(const SignalModel& model) {
  double m = 0.0;
  for (const auto& r : model.regressor_cov)
    m = std::max(m, Eigen::SelfAdjointEigenSolver<MatrixXd>(r, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff());
  return m;
}

struct MeanStabilityReport {
  double rho = 0.0;
  bool stable = false;           // rho(B̄) < 1
  double sufficient_bound = 0.0;  // 2 / (max rho(R_k) + 2 eta)
  double max_mean_step = 0.0;
  bool uniform_step = false;
  bool within_bound = false;  // uniform step below the bound
};

inline MeanStabilityReport mean_stability(const MeanArtifacts& ma, const SignalModel& model, double eta) {
  MeanStabilityReport rep;
  rep.rho = ma.rho;
  rep.stable = ma.stable();
  rep.sufficient_bound = 2.0 / (max_covariance_radius(model) + 2.0 * eta);
  rep.max_mean_step = ma.mean_step.maxCoeff();
  rep.uniform_step = (ma.mean_step.array() == ma.mean_step(0)).all();
  rep.within_bound = rep.uniform_step && rep.max_mean_step > 0.0 && rep.max_mean_step < rep.sufficient_bound;
  return rep;
}

struct MsArtifacts {
  Index nodes = 0;
  Index dim = 0;
  // N^2 x N^2 moment cores; the lifted matrices are core ⊗ I_{L^2}.
  MatrixXd a2;  // Ā⊗Ā + C_A
  MatrixXd m2;  // M̄⊗M̄ + C_M
  MatrixXd p2;  // P̄⊗P̄ + C_P
  MatrixXd q2;  // I - I⊗P̄ - P̄⊗I + P̄⊗P̄ + C_P
  MatrixXd F;
  VectorXd g_b;
  VectorXd r_b;
  MatrixXd K;  // (NL)^2 x NL
  MatrixXd S;  // diag(sigma_z,k^2 R_k)
  double rho_F = 0.0;

  Index block_dim() const noexcept { return dim * dim; }
  MatrixXd A_I() const { return detail::lift(a2, block_dim()); }
  MatrixXd M_I() const { return detail::lift(m2, block_dim()); }
  MatrixXd P_I() const { return detail::lift(p2, block_dim()); }
  MatrixXd Q_I() const { return detail::lift(q2, block_dim()); }
};

/// Builds F with the small-step approximation (the term quadratic in the
/// step-sizes is dropped), together with g_b, r_b and K.
inline MsArtifacts ms_artifacts(const MomentSet& ms, const SignalModel& model, double eta,
                                Index max_dim = kDefaultMaxTheoryDim) {
  detail::check_model(ms, model);
  const Index n = ms.nodes(), l = model.dim(), nl = n * l, l2 = l * l;
  if (nl > max_dim)
    throw Error(ErrorCode::ProblemTooLarge,
                "NL = " + std::to_string(nl) + " exceeds the mean-square analysis limit " + std::to_string(max_dim));
  MsArtifacts out;
  out.nodes = n;
  out.dim = l;
  const MatrixXd in = MatrixXd::Identity(n, n);
  out.a2 = kron(ms.mean_A, ms.mean_A) + ms.cov_A;
  out.m2 = kron(ms.mean_M(), ms.mean_M()) + ms.cov_M;
  out.p2 = kron(ms.mean_P, ms.mean_P) + ms.cov_P;
  out.q2 = MatrixXd::Identity(n * n, n * n) - kron(in, ms.mean_P) - kron(ms.mean_P, in) + out.p2;
  const MatrixXd a2t = out.a2.transpose();

  const MatrixXd qbar = MatrixXd::Identity(nl, nl) - detail::lift(ms.mean_P, l);
  const MatrixXd rx = detail::block_diag(model.regressor_cov, l);
  const VectorXd mdiag = ms.mean_step.replicate(1, l).transpose().reshaped();
  const MatrixXd x = mdiag.asDiagonal() * (rx + eta * qbar);

  // I - I ⊗_b X - X ⊗_b I, written block by block.
  MatrixXd inner = MatrixXd::Identity(nl * nl, nl * nl);
  const MatrixXd il = MatrixXd::Identity(l, l);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const MatrixXd xij = x.block(i * l, j * l, l, l);
      const MatrixXd left = kron(il, xij);   // I_L ⊗ X_ij
      const MatrixXd right = kron(xij, il);  // X_ij ⊗ I_L
      for (Index k = 0; k < n; ++k) {
        inner.block((k * n + i) * l2, (k * n + j) * l2, l2, l2) -= left;
        inner.block((i * n + k) * l2, (j * n + k) * l2, l2, l2) -= right;
      }
    }
  out.F = kron_identity_times(a2t, l2, inner);
  inner.resize(0, 0);

  out.S = MatrixXd::Zero(nl, nl);
  for (Index k = 0; k < n; ++k)
    out.S.block(k * l, k * l, l, l) = model.noise_var(k) * model.regressor_cov[static_cast<std::size_t>(k)];
  const VectorXd s_b = bvec(BlockMatrix(out.S, l));
  out.g_b = kron_identity_times(a2t, l2, kron_identity_times(out.m2, l2, s_b));
  const VectorXd ww = bvec_outer(model.optimum, l);
  out.r_b = kron_identity_times(a2t, l2, kron_identity_times(out.m2, l2, kron_identity_times(out.q2, l2, ww)));

  const BlockMatrix ib(MatrixXd::Identity(nl, nl), l);
  const VectorXd qw = qbar * model.optimum;
  const VectorXd mqw = mdiag.asDiagonal() * qw;
  const MatrixXd t1 = block_kron(ib, BlockMatrix(mqw, l, 1)).matrix();
  const MatrixXd t2 = block_kron(BlockMatrix(rx, l), BlockMatrix(qw, l, 1)).matrix();
  const MatrixXd t3 = block_kron(ib, BlockMatrix(model.optimum, l, 1)).matrix();
  const MatrixXd inner_k = t2 + eta * kron_identity_times(out.q2, l2, t3);
  out.K = kron_identity_times(a2t, l2, MatrixXd(t1 - kron_identity_times(out.m2, l2, inner_k)));

  out.rho_F = spectral_radius(out.F);
  return out;
}

struct MsStabilityReport {
  double rho_F = 0.0;
  bool stable = false;
  double sufficient_bound = 0.0;  // 1 / (2 eta + max rho(R_k))
  double max_mean_step = 0.0;
  bool uniform_step = false;
  bool within_bound = false;
  // Values 1 - eta mu_k - mu_k lambda_j(R_k) - eta mu_l - mu_l lambda_i(R_l)
  // over all node pairs and eigenvalue pairs.
  std::vector<double> kronecker_sum_terms;
  double kronecker_sum_max_abs = 0.0;
};

inline MsStabilityReport ms_stability(const MsArtifacts& msa, const MeanArtifacts& ma, const SignalModel& model,
                                      double eta) {
  MsStabilityReport rep;
  rep.rho_F = msa.rho_F;
  rep.stable = msa.rho_F < 1.0;
  rep.sufficient_bound = 1.0 / (2.0 * eta + max_covariance_radius(model));
  rep.max_mean_step = ma.mean_step.maxCoeff();
  rep.uniform_step = (ma.mean_step.array() == ma.mean_step(0)).all();
  rep.within_bound = rep.uniform_step && rep.max_mean_step > 0.0 && rep.max_mean_step < rep.sufficient_bound;
  std::vector<VectorXd> eig;
  for (const auto& r : model.regressor_cov)
    eig.push_back(Eigen::SelfAdjointEigenSolver<MatrixXd>(r, Eigen::EigenvaluesOnly).eigenvalues());
  const Index n = model.nodes();
  for (Index k = 0; k < n; ++k)
    for (Index l = 0; l < n; ++l) {
      const double mk = ma.mean_step(k), ml = ma.mean_step(l);
      for (double lj : eig[static_cast<std::size_t>(k)])
        for (double li : eig[static_cast<std::size_t>(l)]) {
          const double v = 1.0 - eta * mk - mk * lj - eta * ml - ml * li;
          rep.kronecker_sum_terms.push_back(v);
          rep.kronecker_sum_max_abs = std::max(rep.kronecker_sum_max_abs, std::abs(v));
        }
    }
  return rep;
}

/// bvec of (1/N) I_{NL}: the network MSD weighting.
inline VectorXd network_weight(Index nodes, Index dim) {
  const Index nl = nodes * dim;
  return bvec(BlockMatrix(MatrixXd::Identity(nl, nl) / static_cast<double>(nodes), dim));
}

/// Averages the squared error over the members of cluster q.
inline VectorXd cluster_weight(const ClusteredNetwork& net, Index q) {
  const Index n = net.nodes(), l = net.dim();
  MatrixXd s = MatrixXd::Zero(n * l, n * l);
  const auto& members = net.cluster(q);
  for (Index k : members) s.block(k * l, k * l, l, l).diagonal().setConstant(1.0 / static_cast<double>(members.size()));
  return bvec(BlockMatrix(s, l));
}

namespace detail {

inline void check_curve_inputs(const MsArtifacts& msa, const MeanArtifacts& ma, const VectorXd& sigma,
                               const VectorXd& w0_error, long horizon) {
  const Index nl = msa.nodes * msa.dim;
  if (sigma.size() != nl * nl || w0_error.size() != nl || ma.B.rows() != nl || horizon < 0)
    throw Error(ErrorCode::DimensionMismatch, "theory curve inputs do not match NL");
}

}  // namespace detail

/// Variance curve zeta(i) = E||w̃(i)||^2_sigma for i = 0..horizon, propagated
/// through v(i) = (F^T)^i sigma, the mean error and the Gamma functional.
inline std::vector<double> transient_msd(const MsArtifacts& msa, const MeanArtifacts& ma, const VectorXd& sigma,
                                         const VectorXd& w0_error, long horizon) {
  detail::check_curve_inputs(msa, ma, sigma, w0_error, horizon);
  const double eta = ma.eta;
  const Index l = msa.dim;
  const VectorXd b0 = bvec_outer(w0_error, l);
  const VectorXd k_sigma = msa.K.transpose() * sigma;
  VectorXd v = sigma;
  VectorXd gamma = VectorXd::Zero(sigma.size());  // Gamma(i)^T
  VectorXd e = w0_error;
  std::vector<double> zeta(static_cast<std::size_t>(horizon + 1));
  zeta[0] = b0.dot(sigma);
  for (long i = 0; i < horizon; ++i) {
    const VectorXd fv = msa.F.transpose() * v;
    const double step = msa.g_b.dot(v) - b0.dot(v - fv) + eta * eta * msa.r_b.dot(v) + 2.0 * eta * e.dot(k_sigma) +
                        2.0 * eta * gamma.dot(sigma);
    zeta[static_cast<std::size_t>(i + 1)] = zeta[static_cast<std::size_t>(i)] + step;
    if (eta != 0.0) {
      const VectorXd ke = msa.K * e;
      gamma = msa.F * (gamma + ke) - ke;
    }
    e = ma.B * e + eta * ma.r;
    v = fv;
  }
  return zeta;
}

/// Same curve by propagating m(i) = bvec(E w̃ w̃^T) forward:
/// m(i+1) = F m(i) + g_b + eta^2 r_b + 2 eta K E w̃(i), zeta(i) = m(i)^T sigma.
inline std::vector<double> moment_propagation_oracle(const MsArtifacts& msa, const MeanArtifacts& ma,
                                                     const VectorXd& sigma, const VectorXd& w0_error, long horizon) {
  detail::check_curve_inputs(msa, ma, sigma, w0_error, horizon);
  const double eta = ma.eta;
  VectorXd m = bvec_outer(w0_error, msa.dim);
  VectorXd e = w0_error;
  const VectorXd drive = msa.g_b + eta * eta * msa.r_b;
  std::vector<double> zeta(static_cast<std::size_t>(horizon + 1));
  zeta[0] = m.dot(sigma);
  for (long i = 0; i < horizon; ++i) {
    m = msa.F * m + drive + 2.0 * eta * (msa.K * e);
    e = ma.B * e + eta * ma.r;
    zeta[static_cast<std::size_t>(i + 1)] = m.dot(sigma);
  }
  return zeta;
}

/// zeta* = g_b^T x + eta^2 r_b^T x + 2 eta E w̃(inf)^T K^T x with (I - F^T) x = sigma.
inline double steady_state_msd(const MsArtifacts& msa, const MeanArtifacts& ma, const VectorXd& sigma) {
  const Index nl = msa.nodes * msa.dim;
  if (sigma.size() != nl * nl) throw Error(ErrorCode::DimensionMismatch, "weight length must be (NL)^2");
  if (!(msa.rho_F < 1.0))
    throw Error(ErrorCode::UnstableMeanSquare, "F is not stable: rho(F) = " + std::to_string(msa.rho_F));
  const VectorXd& bias = ma.bias();
  const VectorXd x = detail::checked_solve(MatrixXd::Identity(nl * nl, nl * nl) - msa.F.transpose(), sigma,
                                           ErrorCode::UnstableMeanSquare, "steady state");
  const double eta = ma.eta;
  return msa.g_b.dot(x) + eta * eta * msa.r_b.dot(x) + 2.0 * eta * bias.dot(msa.K.transpose() * x);
}

}  // namespace mtdiff
