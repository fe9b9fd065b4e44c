#pragma once

#include <atomic>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mtdiff/activation.hpp"
#include "mtdiff/error.hpp"
#include "mtdiff/network.hpp"
#include "mtdiff/rng.hpp"

namespace mtdiff {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Per-node regression covariance, noise variance and stacked optimum w*.
struct SignalModel {
  std::vector<MatrixXd> regressor_cov;  // R_{x,k}, L x L
  VectorXd noise_var;                   // sigma^2_{z,k}
  VectorXd optimum;                     // col{w*_1, ..., w*_N}

  Index nodes() const noexcept { return noise_var.size(); }
  Index dim() const noexcept { return nodes() == 0 ? 0 : optimum.size() / nodes(); }
};

/// Builds w* from one task vector per cluster and validates every invariant.
inline SignalModel make_signal_model(const ClusteredNetwork& net, std::vector<MatrixXd> regressor_cov,
                                     VectorXd noise_var, const std::vector<VectorXd>& cluster_tasks) {
  const Index n = net.nodes(), l = net.dim();
  if (static_cast<Index>(regressor_cov.size()) != n || noise_var.size() != n)
    throw ValidationError(ErrorCode::DimensionMismatch, "signal model needs one covariance and noise variance per node");
  if (static_cast<Index>(cluster_tasks.size()) != net.cluster_count())
    throw ValidationError(ErrorCode::DimensionMismatch, "signal model needs one task vector per cluster");
  SignalModel m{std::move(regressor_cov), std::move(noise_var), VectorXd(n * l)};
  for (Index k = 0; k < n; ++k) {
    const MatrixXd& r = m.regressor_cov[static_cast<std::size_t>(k)];
    if (r.rows() != l || r.cols() != l)
      throw ValidationError(ErrorCode::DimensionMismatch, "R_x of node " + std::to_string(k) + " must be L x L");
    if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, r.cwiseAbs().maxCoeff()) ||
        Eigen::LLT<MatrixXd>(r).info() != Eigen::Success)
      throw ValidationError(ErrorCode::ValidationError, "R_x of node " + std::to_string(k) + " is not symmetric positive-definite");
    if (!(m.noise_var(k) >= 0.0))
      throw ValidationError(ErrorCode::ValidationError, "noise variance of node " + std::to_string(k) + " is negative");
    const VectorXd& task = cluster_tasks[static_cast<std::size_t>(net.cluster_of(k))];
    if (task.size() != l) throw ValidationError(ErrorCode::DimensionMismatch, "task vector length must equal L");
    m.optimum.segment(k * l, l) = task;
  }
  return m;
}

/// Source of streaming data for the adaptation step. `add_gradient` adds
/// scale * H_k^T (y_k - H_k w_k) to `out`.
template <class S>
concept DataSource = requires(const S& s, Rng& rng, typename S::Batch& batch, const typename S::Batch& cbatch,
                              Index k, const VectorXd& w, Eigen::Ref<VectorXd> out) {
  { s.nodes() } -> std::convertible_to<Index>;
  { s.dim() } -> std::convertible_to<Index>;
  { s.optimum() } -> std::convertible_to<const VectorXd&>;
  { s.draw(rng, batch) } -> std::same_as<void>;
  { s.add_gradient(cbatch, k, w.segment(0, 1), 1.0, out) } -> std::same_as<void>;
};

/// Scalar linear regression d_k = x_k^T w*_k + z_k with Gaussian x_k, z_k.
class LinearDataSource {
 public:
  struct Batch {
    MatrixXd x;  // column k is x_k(i)
    VectorXd d;
  };

  explicit LinearDataSource(SignalModel model) : model_(std::move(model)) {
    for (const auto& r : model_.regressor_cov) chol_.push_back(Eigen::LLT<MatrixXd>(r).matrixL());
    noise_std_ = model_.noise_var.cwiseSqrt();
  }

  Index nodes() const noexcept { return model_.nodes(); }
  Index dim() const noexcept { return model_.dim(); }
  const VectorXd& optimum() const noexcept { return model_.optimum; }
  const SignalModel& model() const noexcept { return model_; }

  void draw(Rng& rng, Batch& b) const {
    const Index n = nodes(), l = dim();
    std::normal_distribution<double> gauss(0.0, 1.0);
    b.x.resize(l, n);
    b.d.resize(n);
    VectorXd white(l);
    for (Index k = 0; k < n; ++k) {
      for (Index j = 0; j < l; ++j) white(j) = gauss(rng);
      b.x.col(k).noalias() = chol_[static_cast<std::size_t>(k)] * white;
      const double z = noise_std_(k) * gauss(rng);
      b.d(k) = b.x.col(k).dot(model_.optimum.segment(k * l, l)) + z;
    }
  }

  void add_gradient(const Batch& b, Index k, const Eigen::Ref<const VectorXd>& w_k, double scale,
                    Eigen::Ref<VectorXd> out) const {
    const double err = b.d(k) - b.x.col(k).dot(w_k);
    out.noalias() += (scale * err) * b.x.col(k);
  }

 private:
  SignalModel model_;
  std::vector<MatrixXd> chol_;
  VectorXd noise_std_;
};

static_assert(DataSource<LinearDataSource>);

/// Draws one set of per-node pairs (x_k(i), d_k(i)).
inline LinearDataSource::Batch draw_data(const LinearDataSource& source, Rng& rng) {
  LinearDataSource::Batch b;
  source.draw(rng, b);
  return b;
}

struct NetworkState {
  VectorXd w;
  VectorXd psi;
  long iteration = 0;
};

inline NetworkState initial_state(const ClusteredNetwork& net, const VectorXd* w0 = nullptr) {
  const Index size = net.nodes() * net.dim();
  NetworkState s{w0 ? *w0 : VectorXd::Zero(size), VectorXd::Zero(size), 0};
  if (s.w.size() != size) throw Error(ErrorCode::DimensionMismatch, "initial estimate must have N*L entries");
  return s;
}

/// One adapt-then-combine iteration with the coefficients of `draw`. A zero
/// entry in the draw means the agent or link is inactive at this instant.
template <DataSource Source>
void atc_step(NetworkState& state, const typename Source::Batch& batch, const ActivationDraw& draw, double eta,
              const ClusteredNetwork& net, const Source& source) {
  const Index n = net.nodes(), l = net.dim();
  if (state.w.size() != n * l || draw.step.size() != n || draw.A.rows() != n || draw.A.cols() != n ||
      draw.P.rows() != n || draw.P.cols() != n || source.nodes() != n || source.dim() != l)
    throw Error(ErrorCode::DimensionMismatch, "state, draw and data must match the network");
  state.psi.resize(n * l);
  VectorXd reg(l);
  for (Index k = 0; k < n; ++k) {
    auto psi_k = state.psi.segment(k * l, l);
    const auto w_k = state.w.segment(k * l, l);
    psi_k = w_k;
    const double mu = draw.step(k);
    if (mu == 0.0) continue;
    source.add_gradient(batch, k, w_k, mu, psi_k);
    if (eta != 0.0) {
      reg.setZero();
      for (Index j : net.neighborhood(k).inter) {
        const double rho = draw.P(k, j);
        if (rho != 0.0) reg.noalias() += rho * (state.w.segment(j * l, l) - w_k);
      }
      psi_k.noalias() += (eta * mu) * reg;
    }
  }
  for (Index k = 0; k < n; ++k) {
    auto w_k = state.w.segment(k * l, l);
    w_k.setZero();
    for (Index j : net.neighborhood(k).intra) {
      const double a = draw.A(j, k);
      if (a != 0.0) w_k.noalias() += a * state.psi.segment(j * l, l);
    }
  }
  ++state.iteration;
}

template <DataSource Source>
void atc_step_async(NetworkState& state, const typename Source::Batch& batch, const ActivationDraw& draw, double eta,
                    const ClusteredNetwork& net, const Source& source) {
  atc_step(state, batch, draw, eta, net, source);
}

/// Synchronous iteration with the mean coefficients (mu_bar, a_bar, rho_bar).
template <DataSource Source>
void atc_step_sync(NetworkState& state, const typename Source::Batch& batch, const MeanCoefficients& means, double eta,
                   const ClusteredNetwork& net, const Source& source) {
  const ActivationDraw fixed{means.step, means.A, means.P};
  atc_step(state, batch, fixed, eta, net, source);
}

/// Ensemble-averaged learning curve.
struct MsdCurve {
  std::vector<double> msd;                   // network MSD, linear, index = iteration
  std::vector<std::vector<double>> cluster;  // cluster[q][i], empty unless requested
  VectorXd mean_final_estimate;              // run average of w(i) averaged over i in [average_from, horizon]
  long runs = 0;
  std::uint64_t seed = 0;

  static double to_db(double v) { return 10.0 * std::log10(v); }
  double db(std::size_t i) const { return to_db(msd.at(i)); }
  double cluster_db(std::size_t q, std::size_t i) const { return to_db(cluster.at(q).at(i)); }

  /// Mean of the linear MSD over iterations [from, to) reported in dB.
  double average_db(std::size_t from, std::size_t to) const { return to_db(average(msd, from, to)); }
  double cluster_average_db(std::size_t q, std::size_t from, std::size_t to) const {
    return to_db(average(cluster.at(q), from, to));
  }

 private:
  static double average(const std::vector<double>& v, std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += v.at(i);
    return s / static_cast<double>(to - from);
  }
};

struct MonteCarloOptions {
  long horizon = 1000;
  long runs = 100;
  std::uint64_t seed = 0;
  bool per_cluster = false;
  unsigned threads = 0;  // 0 = hardware concurrency
  VectorXd initial;      // empty = zero start
  long average_from = -1;  // first iteration of the estimate average; -1 = horizon only
};

/// Runs one trajectory, calling observer(iteration, state) for i = 0..horizon.
template <AsyncModel Model, DataSource Source, class Observer>
void simulate_run(const ClusteredNetwork& net, const Source& source, const Model& model, double eta, long horizon,
                  std::uint64_t seed, std::uint64_t run, const VectorXd& initial, Observer&& observer) {
  NetworkState state = initial_state(net, initial.size() ? &initial : nullptr);
  Rng data_rng = make_stream(seed, run, Stream::Data);
  Rng act_rng = make_stream(seed, run, Stream::Activation);
  typename Source::Batch batch;
  ActivationDraw draw;
  observer(0L, state);
  for (long i = 1; i <= horizon; ++i) {
    source.draw(data_rng, batch);
    model.draw(act_rng, draw);
    atc_step(state, batch, draw, eta, net, source);
    observer(i, state);
  }
}

/// Monte-Carlo learning curves. Each run owns streams derived from
/// (seed, run index); results are reduced in run order so the output does not
/// depend on the thread count.
template <AsyncModel Model, DataSource Source>
MsdCurve run_monte_carlo(const ClusteredNetwork& net, const Source& source, const Model& model, double eta,
                         const MonteCarloOptions& opt) {
  if (opt.horizon < 0 || opt.runs < 1) throw Error(ErrorCode::DimensionMismatch, "need horizon >= 0 and runs >= 1");
  const long avg_from = opt.average_from < 0 ? opt.horizon : std::min(opt.average_from, opt.horizon);
  const Index n = net.nodes(), l = net.dim();
  const auto steps = static_cast<std::size_t>(opt.horizon + 1);
  const Index clusters = opt.per_cluster ? net.cluster_count() : 0;
  const VectorXd& wstar = source.optimum();

  struct RunResult {
    std::vector<double> msd;
    std::vector<std::vector<double>> cluster;
    VectorXd final_w;
  };
  std::vector<RunResult> results(static_cast<std::size_t>(opt.runs));

  auto one_run = [&](long run) {
    RunResult& res = results[static_cast<std::size_t>(run)];
    res.msd.assign(steps, 0.0);
    res.cluster.assign(static_cast<std::size_t>(clusters), std::vector<double>(steps, 0.0));
    VectorXd node_err(n);
    simulate_run(net, source, model, eta, opt.horizon, opt.seed, static_cast<std::uint64_t>(run), opt.initial,
                 [&](long i, const NetworkState& s) {
                   for (Index k = 0; k < n; ++k)
                     node_err(k) = (wstar.segment(k * l, l) - s.w.segment(k * l, l)).squaredNorm();
                   const auto idx = static_cast<std::size_t>(i);
                   res.msd[idx] = node_err.sum() / static_cast<double>(n);
                   for (Index q = 0; q < clusters; ++q) {
                     double acc = 0.0;
                     for (Index k : net.cluster(q)) acc += node_err(k);
                     res.cluster[static_cast<std::size_t>(q)][idx] = acc / static_cast<double>(net.cluster(q).size());
                   }
                   if (i == avg_from) res.final_w = s.w;
                   else if (i > avg_from) res.final_w += s.w;
                 });
  };

  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<long>(threads, opt.runs));
  if (threads <= 1) {
    for (long r = 0; r < opt.runs; ++r) one_run(r);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (long r = next++; r < opt.runs; r = next++) one_run(r);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  MsdCurve curve;
  curve.runs = opt.runs;
  curve.seed = opt.seed;
  curve.msd.assign(steps, 0.0);
  curve.cluster.assign(static_cast<std::size_t>(clusters), std::vector<double>(steps, 0.0));
  curve.mean_final_estimate = VectorXd::Zero(n * l);
  for (const RunResult& res : results) {
    for (std::size_t i = 0; i < steps; ++i) curve.msd[i] += res.msd[i];
    for (std::size_t q = 0; q < res.cluster.size(); ++q)
      for (std::size_t i = 0; i < steps; ++i) curve.cluster[q][i] += res.cluster[q][i];
    curve.mean_final_estimate += res.final_w / static_cast<double>(opt.horizon - avg_from + 1);
  }
  const double inv = 1.0 / static_cast<double>(opt.runs);
  for (double& v : curve.msd) v *= inv;
  for (auto& c : curve.cluster)
    for (double& v : c) v *= inv;
  curve.mean_final_estimate *= inv;
  return curve;
}

}  // namespace mtdiff
