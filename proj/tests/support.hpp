#pragma once

// Shared fixtures for the test binaries.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mtdiff/activation.hpp"
#include "mtdiff/diffusion.hpp"
#include "mtdiff/network.hpp"
#include "mtdiff/rng.hpp"

namespace mtdiff::fixtures {

inline Eigen::MatrixXd random_matrix(Index rows, Index cols, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline Eigen::VectorXd random_vector(Index n, Rng& rng) { return random_matrix(n, 1, rng); }

/// Random connected network: a spanning path plus extra random edges, nodes
/// split into `clusters` contiguous groups.
inline ClusteredNetwork random_network(Index n, Index clusters, Index dim, double extra_edge_prob, Rng& rng) {
  std::vector<Edge> edges;
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
  std::shuffle(order.begin(), order.end(), rng);
  for (Index k = 1; k < n; ++k) edges.emplace_back(order[static_cast<std::size_t>(k - 1)], order[static_cast<std::size_t>(k)]);
  std::bernoulli_distribution extra(extra_edge_prob);
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b)
      if (extra(rng)) edges.emplace_back(a, b);
  std::vector<std::vector<Index>> parts(static_cast<std::size_t>(clusters));
  for (Index k = 0; k < n; ++k) parts[static_cast<std::size_t>(k * clusters / n)].push_back(k);
  return build_network(n, dim, std::move(edges), std::move(parts));
}

struct WeightedDraw {
  double weight;
  ActivationDraw draw;
};

/// Every on/off pattern of the Bernoulli model with its probability. Each
/// pattern is realized by forcing the probabilities to 0 or 1, which makes
/// sample() deterministic.
inline std::vector<WeightedDraw> enumerate_draws(const BernoulliParams& bp, const ClusteredNetwork& net) {
  const Index n = net.nodes();
  struct Var {
    double* forced;
    double prob;
  };
  BernoulliParams forced = bp;
  std::vector<Var> vars;
  for (Index k = 0; k < n; ++k) vars.push_back({&forced.step_prob(k), bp.step_prob(k)});
  for (Index k = 0; k < n; ++k) {
    for (Index l : net.neighborhood(k).intra_strict) vars.push_back({&forced.weight_prob(l, k), bp.weight_prob(l, k)});
    for (Index l : net.neighborhood(k).inter) vars.push_back({&forced.reg_prob(k, l), bp.reg_prob(k, l)});
  }
  std::vector<WeightedDraw> out;
  Rng rng(0);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << vars.size()); ++mask) {
    double w = 1.0;
    for (std::size_t v = 0; v < vars.size(); ++v) {
      const bool on = (mask >> v) & 1U;
      *vars[v].forced = on ? 1.0 : 0.0;
      w *= on ? vars[v].prob : 1.0 - vars[v].prob;
    }
    if (w != 0.0) out.push_back({w, sample(forced, net, rng)});
  }
  return out;
}

/// Exact moments by summing over every on/off pattern.
inline MomentSet enumerate_moments(const BernoulliParams& bp, const ClusteredNetwork& net) {
  const Index n = net.nodes();
  MatrixXd em = MatrixXd::Zero(n, n), ea = em, ep = em;
  MatrixXd em2 = MatrixXd::Zero(n * n, n * n), ea2 = em2, ep2 = em2;
  for (const auto& [w, d] : enumerate_draws(bp, net)) {
    const MatrixXd m = d.M();
    em += w * m;
    ea += w * d.A;
    ep += w * d.P;
    em2 += w * kron(m, m);
    ea2 += w * kron(d.A, d.A);
    ep2 += w * kron(d.P, d.P);
  }
  MomentSet ms;
  ms.mean_step = em.diagonal();
  ms.mean_A = ea;
  ms.mean_P = ep;
  ms.cov_M = em2 - kron(em, em);
  ms.cov_A = ea2 - kron(ea, ea);
  ms.cov_P = ep2 - kron(ep, ep);
  return ms;
}

struct Instance {
  ClusteredNetwork net;
  BernoulliParams params;
  SignalModel model;
};

// Random SPD covariances, random tasks per cluster, random probabilities.
inline Instance random_instance(Index n, Index clusters, Index l, double step, Rng& rng) {
  Instance in;
  in.net = fixtures::random_network(n, clusters, l, 0.5, rng);
  in.params = uniform_bernoulli(in.net, step, 1.0, 1.0, 1.0);
  std::uniform_real_distribution<double> prob(0.3, 0.95), var(0.5, 1.5), noise(0.005, 0.02);
  for (Index k = 0; k < n; ++k) {
    in.params.step_prob(k) = prob(rng);
    for (Index j = 0; j < n; ++j) {
      if (in.params.weight(j, k) != 0.0) in.params.weight_prob(j, k) = prob(rng);
      if (in.params.reg(k, j) != 0.0) in.params.reg_prob(k, j) = prob(rng);
    }
  }
  std::vector<MatrixXd> cov;
  VectorXd nv(n);
  for (Index k = 0; k < n; ++k) {
    const MatrixXd g = random_matrix(l, l, rng);
    cov.push_back(0.3 * g * g.transpose() + var(rng) * MatrixXd::Identity(l, l));
    nv(k) = noise(rng);
  }
  std::vector<VectorXd> tasks;
  for (Index q = 0; q < clusters; ++q) tasks.push_back(random_vector(l, rng));
  in.model = make_signal_model(in.net, cov, nv, tasks);
  return in;
}

}  // namespace mtdiff::fixtures
