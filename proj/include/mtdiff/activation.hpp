#pragma once

// Random on/off behavior of agents and links. Each agent updates with
// probability q_k, each intra-cluster link (l -> k) carries weight a_lk with
// probability p_lk, each inter-cluster link (k -> l) carries regularization
// factor rho_kl with probability r_kl. All variables are independent across
// nodes, links and time. The receiving node absorbs missing mass on its own
// diagonal, so every draw keeps A left-stochastic and P right-stochastic.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <string>

#include <Eigen/Dense>

#include "mtdiff/block_linalg.hpp"
#include "mtdiff/error.hpp"
#include "mtdiff/network.hpp"
#include "mtdiff/rng.hpp"

namespace mtdiff {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct BernoulliParams {
  VectorXd step;         // mu_k
  VectorXd step_prob;    // q_k
  MatrixXd weight;       // (l, k): a_lk for l in N_k^- ∩ C(k)
  MatrixXd weight_prob;  // (l, k): p_lk
  MatrixXd reg;          // (k, l): rho_kl for l in N_k \ C(k)
  MatrixXd reg_prob;     // (k, l): r_kl
};

/// One realization of the step-sizes and combination/regularization matrices.
struct ActivationDraw {
  VectorXd step;  // diagonal of M(i)
  MatrixXd A;     // left-stochastic
  MatrixXd P;     // right-stochastic

  MatrixXd M() const { return step.asDiagonal(); }
};

/// First and second moments of an asynchronous model. Covariances are
/// Kronecker covariances E[(X - X̄) ⊗ (X - X̄)] of size N^2 x N^2.
struct MomentSet {
  VectorXd mean_step;
  MatrixXd mean_A;
  MatrixXd mean_P;
  MatrixXd cov_M;
  MatrixXd cov_A;
  MatrixXd cov_P;

  Index nodes() const noexcept { return mean_step.size(); }
  MatrixXd mean_M() const { return mean_step.asDiagonal(); }
};

/// Nominal weights a_lk = 1 / |N_k ∩ C(k)| for every intra-cluster neighbor.
inline MatrixXd uniform_intra_weights(const ClusteredNetwork& net) {
  MatrixXd a = MatrixXd::Zero(net.nodes(), net.nodes());
  for (Index k = 0; k < net.nodes(); ++k) {
    const auto& nb = net.neighborhood(k);
    for (Index l : nb.intra_strict) a(l, k) = 1.0 / static_cast<double>(nb.intra.size());
  }
  return a;
}

/// Nominal factors rho_kl = 1 / |N_k \ C(k)| for every inter-cluster neighbor.
inline MatrixXd uniform_inter_factors(const ClusteredNetwork& net) {
  MatrixXd rho = MatrixXd::Zero(net.nodes(), net.nodes());
  for (Index k = 0; k < net.nodes(); ++k) {
    const auto& nb = net.neighborhood(k);
    for (Index l : nb.inter) rho(k, l) = 1.0 / static_cast<double>(nb.inter.size());
  }
  return rho;
}

/// Same nominal step and same success probabilities everywhere.
inline BernoulliParams uniform_bernoulli(const ClusteredNetwork& net, double step, double q, double p, double r) {
  const Index n = net.nodes();
  BernoulliParams bp;
  bp.step = VectorXd::Constant(n, step);
  bp.step_prob = VectorXd::Constant(n, q);
  bp.weight = uniform_intra_weights(net);
  bp.reg = uniform_inter_factors(net);
  bp.weight_prob = ((bp.weight.array() != 0.0).cast<double>() * p).matrix();
  bp.reg_prob = ((bp.reg.array() != 0.0).cast<double>() * r).matrix();
  return bp;
}

/// Throws ValidationError naming the first violated invariant.
inline void validate(const BernoulliParams& bp, const ClusteredNetwork& net, double tol = 1e-12) {
  const Index n = net.nodes();
  if (bp.step.size() != n || bp.step_prob.size() != n || bp.weight.rows() != n || bp.weight.cols() != n ||
      bp.weight_prob.rows() != n || bp.weight_prob.cols() != n || bp.reg.rows() != n || bp.reg.cols() != n ||
      bp.reg_prob.rows() != n || bp.reg_prob.cols() != n)
    throw ValidationError(ErrorCode::DimensionMismatch, "Bernoulli parameters must be sized to the network");
  auto check_prob = [](double v, const std::string& what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(ErrorCode::ProbabilityRange, what + " = " + std::to_string(v));
  };
  for (Index k = 0; k < n; ++k) {
    if (!(bp.step(k) > 0.0)) throw ValidationError(ErrorCode::InfeasibleWeights, "step of node " + std::to_string(k) + " must be positive");
    check_prob(bp.step_prob(k), "q_" + std::to_string(k));
    const auto& nb = net.neighborhood(k);
    double a_sum = 0.0;
    for (Index l = 0; l < n; ++l) {
      const bool intra_link = std::binary_search(nb.intra_strict.begin(), nb.intra_strict.end(), l);
      const bool inter_link = std::binary_search(nb.inter.begin(), nb.inter.end(), l);
      if (intra_link) {
        const double a = bp.weight(l, k);
        if (!(a > 0.0 && a < 1.0))
          throw ValidationError(ErrorCode::InfeasibleWeights, "a_" + std::to_string(l) + "," + std::to_string(k) + " must lie in (0,1)");
        check_prob(bp.weight_prob(l, k), "p_" + std::to_string(l) + "," + std::to_string(k));
        a_sum += a;
      } else if (bp.weight(l, k) != 0.0) {
        throw ValidationError(ErrorCode::InfeasibleWeights, "weight on non-intra-cluster link " + std::to_string(l) + "->" + std::to_string(k));
      }
      if (inter_link) {
        const double rho = bp.reg(k, l);
        if (!(rho > 0.0 && rho <= 1.0))
          throw ValidationError(ErrorCode::InfeasibleWeights, "rho_" + std::to_string(k) + "," + std::to_string(l) + " must lie in (0,1]");
        check_prob(bp.reg_prob(k, l), "r_" + std::to_string(k) + "," + std::to_string(l));
      } else if (bp.reg(k, l) != 0.0) {
        throw ValidationError(ErrorCode::InfeasibleWeights, "regularization on non-inter-cluster link " + std::to_string(k) + "->" + std::to_string(l));
      }
    }
    if (a_sum > 1.0 + tol)
      throw ValidationError(ErrorCode::InfeasibleWeights, "intra-cluster weights into node " + std::to_string(k) + " exceed 1");
    double rho_sum = 0.0;
    for (Index l : nb.inter) rho_sum += bp.reg(k, l);
    if (rho_sum > 1.0 + tol)
      throw ValidationError(ErrorCode::InfeasibleWeights, "regularization factors of node " + std::to_string(k) + " exceed 1");
  }
}

/// Mean step-sizes and mean matrices only; cheap for large networks.
struct MeanCoefficients {
  VectorXd step;
  MatrixXd A;
  MatrixXd P;
};

inline MeanCoefficients mean_coefficients(const BernoulliParams& bp, const ClusteredNetwork& net) {
  const Index n = net.nodes();
  MeanCoefficients m{bp.step.cwiseProduct(bp.step_prob), MatrixXd::Zero(n, n), MatrixXd::Zero(n, n)};
  for (Index k = 0; k < n; ++k) {
    const auto& nb = net.neighborhood(k);
    double a_sum = 0.0;
    for (Index l : nb.intra_strict) {
      m.A(l, k) = bp.weight(l, k) * bp.weight_prob(l, k);
      a_sum += m.A(l, k);
    }
    m.A(k, k) = 1.0 - a_sum;
    double rho_sum = 0.0;
    for (Index l : nb.inter) {
      m.P(k, l) = bp.reg(k, l) * bp.reg_prob(k, l);
      rho_sum += m.P(k, l);
    }
    m.P(k, k) = 1.0 - rho_sum;
  }
  return m;
}

/// Exact moments of the Bernoulli model. Variables attached to different
/// receiving nodes are independent, so C_A only couples entries of one column
/// and C_P only entries of one row.
inline MomentSet moments(const BernoulliParams& bp, const ClusteredNetwork& net) {
  const Index n = net.nodes();
  const MeanCoefficients mean = mean_coefficients(bp, net);
  MomentSet ms;
  ms.mean_step = mean.step;
  ms.mean_A = mean.A;
  ms.mean_P = mean.P;
  ms.cov_M = MatrixXd::Zero(n * n, n * n);
  ms.cov_A = MatrixXd::Zero(n * n, n * n);
  ms.cov_P = MatrixXd::Zero(n * n, n * n);

  for (Index k = 0; k < n; ++k) {
    const double mu = bp.step(k), q = bp.step_prob(k);
    ms.cov_M(k * n + k, k * n + k) = mu * mu * q * (1.0 - q);
  }

  // cov(A_lk, A_mk) sits at row l*n + m, column k*n + k.
  for (Index k = 0; k < n; ++k) {
    const auto& nb = net.neighborhood(k);
    const Index col = k * n + k;
    double total = 0.0;
    for (Index l : nb.intra_strict) {
      const double a = bp.weight(l, k), p = bp.weight_prob(l, k);
      const double c = a * a * p * (1.0 - p);
      ms.cov_A(l * n + l, col) = c;
      ms.cov_A(l * n + k, col) = -c;
      ms.cov_A(k * n + l, col) = -c;
      total += c;
    }
    ms.cov_A(k * n + k, col) = total;
  }

  // cov(P_kl, P_km) sits at row k*n + k, column l*n + m.
  for (Index k = 0; k < n; ++k) {
    const auto& nb = net.neighborhood(k);
    const Index row = k * n + k;
    double total = 0.0;
    for (Index l : nb.inter) {
      const double rho = bp.reg(k, l), r = bp.reg_prob(k, l);
      const double c = rho * rho * r * (1.0 - r);
      ms.cov_P(row, l * n + l) = c;
      ms.cov_P(row, l * n + k) = -c;
      ms.cov_P(row, k * n + l) = -c;
      total += c;
    }
    ms.cov_P(row, k * n + k) = total;
  }
  return ms;
}

/// Draws one realization into `out`, reusing its storage.
inline void sample(const BernoulliParams& bp, const ClusteredNetwork& net, Rng& rng, ActivationDraw& out) {
  const Index n = net.nodes();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  out.step.resize(n);
  out.A.setZero(n, n);
  out.P.setZero(n, n);
  for (Index k = 0; k < n; ++k) out.step(k) = unit(rng) < bp.step_prob(k) ? bp.step(k) : 0.0;
  for (Index k = 0; k < n; ++k) {
    const auto& nb = net.neighborhood(k);
    double a_sum = 0.0;
    for (Index l : nb.intra_strict) {
      if (unit(rng) < bp.weight_prob(l, k)) {
        out.A(l, k) = bp.weight(l, k);
        a_sum += out.A(l, k);
      }
    }
    out.A(k, k) = 1.0 - a_sum;
  }
  for (Index k = 0; k < n; ++k) {
    const auto& nb = net.neighborhood(k);
    double rho_sum = 0.0;
    for (Index l : nb.inter) {
      if (unit(rng) < bp.reg_prob(k, l)) {
        out.P(k, l) = bp.reg(k, l);
        rho_sum += out.P(k, l);
      }
    }
    out.P(k, k) = 1.0 - rho_sum;
  }
}

inline ActivationDraw sample(const BernoulliParams& bp, const ClusteredNetwork& net, Rng& rng) {
  ActivationDraw d;
  sample(bp, net, rng, d);
  return d;
}

/// Anything that can produce activation draws and report their moments.
template <class Model>
concept AsyncModel = requires(const Model& m, Rng& rng, ActivationDraw& d) {
  { m.draw(rng, d) } -> std::same_as<void>;
  { m.means() } -> std::convertible_to<MeanCoefficients>;
};

/// The shipped asynchronous model.
class BernoulliModel {
 public:
  BernoulliModel(const ClusteredNetwork& net, BernoulliParams params) : net_(&net), params_(std::move(params)) {
    validate(params_, *net_);
  }

  void draw(Rng& rng, ActivationDraw& out) const { sample(params_, *net_, rng, out); }
  MeanCoefficients means() const { return mean_coefficients(params_, *net_); }
  MomentSet second_moments() const { return moments(params_, *net_); }
  const BernoulliParams& params() const noexcept { return params_; }

 private:
  const ClusteredNetwork* net_;
  BernoulliParams params_;
};

/// Synchronous operation: every iteration uses the same coefficients and no
/// randomness is consumed.
class FixedModel {
 public:
  explicit FixedModel(MeanCoefficients coeffs) : coeffs_(std::move(coeffs)) {}

  void draw(Rng&, ActivationDraw& out) const {
    out.step = coeffs_.step;
    out.A = coeffs_.A;
    out.P = coeffs_.P;
  }
  MeanCoefficients means() const { return coeffs_; }

 private:
  MeanCoefficients coeffs_;
};

static_assert(AsyncModel<BernoulliModel>);
static_assert(AsyncModel<FixedModel>);

struct StochasticityReport {
  double a_column_deviation = 0.0;  // max |column sum - 1| of Ā⊗Ā + C_A
  double a_min_entry = 0.0;
  double p_row_deviation = 0.0;     // max |row sum - 1| of P̄⊗P̄ + C_P
  double p_min_entry = 0.0;
  double mean_a_column_deviation = 0.0;
  double mean_p_row_deviation = 0.0;
  double tolerance = 1e-12;

  bool a_left_stochastic() const {
    return a_column_deviation <= tolerance && mean_a_column_deviation <= tolerance && a_min_entry >= -tolerance;
  }
  bool p_right_stochastic() const {
    return p_row_deviation <= tolerance && mean_p_row_deviation <= tolerance && p_min_entry >= -tolerance;
  }
  bool ok() const { return a_left_stochastic() && p_right_stochastic(); }
};

inline MatrixXd second_moment_A(const MomentSet& ms) { return kron(ms.mean_A, ms.mean_A) + ms.cov_A; }
inline MatrixXd second_moment_P(const MomentSet& ms) { return kron(ms.mean_P, ms.mean_P) + ms.cov_P; }
inline MatrixXd second_moment_M(const MomentSet& ms) {
  const MatrixXd m = ms.mean_M();
  return kron(m, m) + ms.cov_M;
}

/// Checks that E[A⊗A] is left-stochastic and E[P⊗P] right-stochastic.
inline StochasticityReport verify_stochastic_moments(const MomentSet& ms, double tol = 1e-12) {
  StochasticityReport rep;
  rep.tolerance = tol;
  const MatrixXd a2 = second_moment_A(ms);
  const MatrixXd p2 = second_moment_P(ms);
  rep.a_column_deviation = (a2.colwise().sum().array() - 1.0).abs().maxCoeff();
  rep.a_min_entry = a2.minCoeff();
  rep.p_row_deviation = (p2.rowwise().sum().array() - 1.0).abs().maxCoeff();
  rep.p_min_entry = p2.minCoeff();
  rep.mean_a_column_deviation = (ms.mean_A.colwise().sum().array() - 1.0).abs().maxCoeff();
  rep.mean_p_row_deviation = (ms.mean_P.rowwise().sum().array() - 1.0).abs().maxCoeff();
  rep.a_min_entry = std::min(rep.a_min_entry, ms.mean_A.minCoeff());
  rep.p_min_entry = std::min(rep.p_min_entry, ms.mean_P.minCoeff());
  return rep;
}

}  // namespace mtdiff
