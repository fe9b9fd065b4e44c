#pragma once

// Cooperative spectrum sensing. Each secondary user is a fully connected
// cluster of antennas; every antenna regresses the received power spectrum on
// Gaussian basis functions weighted by estimated path-loss factors.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtdiff/activation.hpp"
#include "mtdiff/diffusion.hpp"
#include "mtdiff/error.hpp"
#include "mtdiff/network.hpp"
#include "mtdiff/rng.hpp"

namespace mtdiff {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct SpectrumScenario {
  Index antennas = 4;            // N_R
  Index basis = 21;              // N_B
  Index freq_samples = 80;       // N_F
  double basis_var = 0.001;      // sigma_m^2
  std::vector<VectorXd> alpha;   // one length-N_B vector per primary user
  std::vector<Point> primary;    // transmitter positions
  std::vector<Point> secondary;  // receiver positions
  double threshold = 0.0;          // p_0
  double pathloss_rel_std = 0.1;   // std of the path-loss perturbation relative to p̄
  double noise_std = 0.01;
  double link_decay = 0.15;        // a in exp(-a d)
  double neighbor_radius = 0.0;    // secondary users closer than this are neighbors
  double step = 0.0;
  double step_prob = 0.4;
  double intra_prob = 0.4;

  Index primary_users() const noexcept { return static_cast<Index>(primary.size()); }
  Index secondary_users() const noexcept { return static_cast<Index>(secondary.size()); }
  Index nodes() const noexcept { return secondary_users() * antennas; }
  Index dim() const noexcept { return basis * primary_users(); }
};

/// N_F x N_B matrix of basis magnitudes; centers and samples are uniform on [0, 1].
inline MatrixXd basis_matrix(Index freq_samples, Index basis, double basis_var) {
  MatrixXd phi(freq_samples, basis);
  for (Index j = 0; j < freq_samples; ++j) {
    const double f = freq_samples > 1 ? static_cast<double>(j) / static_cast<double>(freq_samples - 1) : 0.0;
    for (Index m = 0; m < basis; ++m) {
      const double fm = basis > 1 ? static_cast<double>(m) / static_cast<double>(basis - 1) : 0.0;
      phi(j, m) = std::exp(-(f - fm) * (f - fm) / (2.0 * basis_var));
    }
  }
  return phi;
}

/// Streaming measurements r = Φ_k(i) α* + z with path loss p̄ (1 + δ).
/// Antenna k regresses on p̂_q = p̄_q when the realized loss exceeds p_0 and 0
/// otherwise.
class SpectralDataSource {
 public:
  struct Batch {
    MatrixXd r;     // N_F x N
    MatrixXd phat;  // N_P x N
  };

  SpectralDataSource(const SpectrumScenario& s, MatrixXd mean_loss)
      : antennas_(s.antennas),
        basis_(s.basis),
        threshold_(s.threshold),
        rel_std_(s.pathloss_rel_std),
        noise_std_(s.noise_std),
        phi_(basis_matrix(s.freq_samples, s.basis, s.basis_var)),
        mean_loss_(std::move(mean_loss)) {
    const Index np = s.primary_users();
    spectra_.resize(s.freq_samples, np);
    VectorXd alpha(s.dim());
    for (Index q = 0; q < np; ++q) {
      spectra_.col(q) = phi_ * s.alpha[static_cast<std::size_t>(q)];
      alpha.segment(q * basis_, basis_) = s.alpha[static_cast<std::size_t>(q)];
    }
    optimum_ = alpha.replicate(s.nodes(), 1);
  }

  Index nodes() const noexcept { return mean_loss_.cols() * antennas_; }
  Index dim() const noexcept { return basis_ * mean_loss_.rows(); }
  const VectorXd& optimum() const noexcept { return optimum_; }
  const MatrixXd& basis() const noexcept { return phi_; }
  const MatrixXd& mean_loss() const noexcept { return mean_loss_; }

  void draw(Rng& rng, Batch& b) const {
    const Index n = nodes(), np = mean_loss_.rows(), nf = phi_.rows();
    std::normal_distribution<double> gauss(0.0, 1.0);
    b.r.resize(nf, n);
    b.phat.resize(np, n);
    for (Index k = 0; k < n; ++k) {
      const Index user = k / antennas_;
      auto rk = b.r.col(k);
      rk.setZero();
      for (Index q = 0; q < np; ++q) {
        const double pbar = mean_loss_(q, user);
        const double p = pbar * (1.0 + rel_std_ * gauss(rng));
        b.phat(q, k) = p > threshold_ ? pbar : 0.0;
        rk.noalias() += p * spectra_.col(q);
      }
      for (Index j = 0; j < nf; ++j) rk(j) += noise_std_ * gauss(rng);
    }
  }

  void add_gradient(const Batch& b, Index k, const Eigen::Ref<const VectorXd>& w_k, double scale,
                    Eigen::Ref<VectorXd> out) const {
    const Index np = mean_loss_.rows();
    VectorXd e = b.r.col(k);
    for (Index q = 0; q < np; ++q) {
      const double ph = b.phat(q, k);
      if (ph != 0.0) e.noalias() -= ph * (phi_ * w_k.segment(q * basis_, basis_));
    }
    const VectorXd back = phi_.transpose() * e;
    for (Index q = 0; q < np; ++q) {
      const double ph = b.phat(q, k);
      if (ph != 0.0) out.segment(q * basis_, basis_).noalias() += (scale * ph) * back;
    }
  }

 private:
  Index antennas_;
  Index basis_;
  double threshold_;
  double rel_std_;
  double noise_std_;
  MatrixXd phi_;
  MatrixXd mean_loss_;  // p̄_{q,k}: primary user x secondary user
  MatrixXd spectra_;    // column q: Φ α*_q
  VectorXd optimum_;
};

static_assert(DataSource<SpectralDataSource>);

struct SpectrumModel {
  ClusteredNetwork net;
  BernoulliParams params;
  SpectralDataSource source;
  std::vector<std::vector<Index>> user_neighbors;  // neighboring secondary users
};

/// Assembles the clustered network, Bernoulli parameters and data source.
inline SpectrumModel build_spectrum_model(const SpectrumScenario& s) {
  const Index np = s.primary_users(), ns = s.secondary_users(), nr = s.antennas;
  if (np < 1 || ns < 1 || nr < 1 || s.basis < 1 || s.freq_samples < 1)
    throw ValidationError(ErrorCode::DimensionMismatch, "spectrum scenario needs users, antennas, basis and samples");
  if (static_cast<Index>(s.alpha.size()) != np)
    throw ValidationError(ErrorCode::DimensionMismatch, "one combination vector per primary user is required");
  for (const auto& a : s.alpha)
    if (a.size() != s.basis)
      throw ValidationError(ErrorCode::DimensionMismatch, "combination vectors must have N_B entries");
  if (!(s.basis_var > 0.0) || !(s.noise_std >= 0.0) || !(s.pathloss_rel_std >= 0.0) || !(s.step > 0.0))
    throw ValidationError(ErrorCode::ValidationError, "spectrum scenario has a non-positive variance or step");

  MatrixXd mean_loss(np, ns);
  for (Index q = 0; q < np; ++q)
    for (Index k = 0; k < ns; ++k) {
      const double d = distance(s.primary[static_cast<std::size_t>(q)], s.secondary[static_cast<std::size_t>(k)]);
      if (!(d > 1e-12))
        throw ValidationError(ErrorCode::DegenerateGeometry, "primary user " + std::to_string(q) +
                                                                 " coincides with secondary user " + std::to_string(k));
      mean_loss(q, k) = 1.0 / (d * d);
    }

  std::vector<std::vector<Index>> user_neighbors(static_cast<std::size_t>(ns));
  for (Index a = 0; a < ns; ++a)
    for (Index b = 0; b < ns; ++b)
      if (a != b && distance(s.secondary[static_cast<std::size_t>(a)], s.secondary[static_cast<std::size_t>(b)]) <=
                        s.neighbor_radius)
        user_neighbors[static_cast<std::size_t>(a)].push_back(b);

  std::vector<Edge> edges;
  std::vector<std::vector<Index>> clusters(static_cast<std::size_t>(ns));
  for (Index a = 0; a < ns; ++a) {
    for (Index l = 0; l < nr; ++l) {
      clusters[static_cast<std::size_t>(a)].push_back(a * nr + l);
      for (Index m = l + 1; m < nr; ++m) edges.emplace_back(a * nr + l, a * nr + m);
    }
    for (Index b : user_neighbors[static_cast<std::size_t>(a)])
      if (b > a)
        for (Index l = 0; l < nr; ++l)
          for (Index m = 0; m < nr; ++m) edges.emplace_back(a * nr + l, b * nr + m);
  }
  ClusteredNetwork net = build_network(ns * nr, s.dim(), std::move(edges), std::move(clusters));

  const Index n = net.nodes();
  BernoulliParams bp;
  bp.step = VectorXd::Constant(n, s.step);
  bp.step_prob = VectorXd::Constant(n, s.step_prob);
  bp.weight = MatrixXd::Zero(n, n);
  bp.weight_prob = MatrixXd::Zero(n, n);
  bp.reg = MatrixXd::Zero(n, n);
  bp.reg_prob = MatrixXd::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    const auto& nb = net.neighborhood(k);
    for (Index l : nb.intra_strict) {
      bp.weight(l, k) = 1.0 / static_cast<double>(nr);
      bp.weight_prob(l, k) = s.intra_prob;
    }
    const Index user = k / nr;
    const auto users = static_cast<double>(user_neighbors[static_cast<std::size_t>(user)].size());
    for (Index l : nb.inter) {
      const double d = distance(s.secondary[static_cast<std::size_t>(user)], s.secondary[static_cast<std::size_t>(l / nr)]);
      bp.reg(k, l) = 1.0 / (static_cast<double>(nr) * users);
      bp.reg_prob(k, l) = std::exp(-s.link_decay * d);
    }
  }
  validate(bp, net);
  SpectralDataSource source(s, std::move(mean_loss));
  return SpectrumModel{std::move(net), std::move(bp), std::move(source), std::move(user_neighbors)};
}

/// Sum over primary users of the estimated combination vectors.
inline VectorXd aggregate_coefficients(const Eigen::Ref<const VectorXd>& w_k, Index primary_users, Index basis) {
  VectorXd s = VectorXd::Zero(basis);
  for (Index q = 0; q < primary_users; ++q) s += w_k.segment(q * basis, basis);
  return s;
}

/// Reconstructed aggregate power spectrum Φ Σ_q α̂_q at the N_F sample frequencies.
inline VectorXd reconstructed_psd(const Eigen::Ref<const VectorXd>& w_k, const MatrixXd& phi, Index primary_users) {
  return phi * aggregate_coefficients(w_k, primary_users, phi.cols());
}

}  // namespace mtdiff
