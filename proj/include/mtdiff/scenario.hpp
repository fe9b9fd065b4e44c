#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mtdiff/activation.hpp"
#include "mtdiff/config.hpp"
#include "mtdiff/diffusion.hpp"
#include "mtdiff/error.hpp"
#include "mtdiff/spectrum.hpp"
#include "mtdiff/theory.hpp"

namespace mtdiff {

/// Moments of a network whose coefficients never change.
inline MomentSet deterministic_moments(const MeanCoefficients& m) {
  const Index n = m.step.size();
  return MomentSet{m.step, m.A, m.P, MatrixXd::Zero(n * n, n * n), MatrixXd::Zero(n * n, n * n),
                   MatrixXd::Zero(n * n, n * n)};
}

struct CurveResult {
  std::string label;  // async_eta<eta> or sync_eta<eta>
  bool async = true;
  double eta = 0.0;
  std::optional<MsdCurve> sim;
  std::vector<double> theory;  // linear zeta(i), empty when not computed
  std::optional<MeanStabilityReport> mean;
  std::optional<MsStabilityReport> ms;
  std::optional<double> zeta_star;
  std::optional<VectorXd> bias;
  std::vector<VectorXd> psd;  // spectrum scenarios: one reconstructed PSD per secondary user
};

struct ScenarioResult {
  std::string name;
  std::vector<CurveResult> curves;
  std::vector<std::string> warnings;

  const CurveResult& curve(const std::string& label) const {
    for (const auto& c : curves)
      if (c.label == label) return c;
    throw Error(ErrorCode::DimensionMismatch, "no curve labelled " + label);
  }
};

inline std::string curve_label(bool async, double eta) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_eta%g", async ? "async" : "sync", eta);
  return buf;
}

namespace scenario_detail {

inline void add_theory(CurveResult& out, const MomentSet& ms, const RegressionSetup& setup, const RunSettings& run,
                       ScenarioResult& result) {
  const SignalModel& model = setup.model;
  const MeanArtifacts ma = mean_artifacts(ms, model, out.eta);
  out.mean = mean_stability(ma, model, out.eta);
  if (ma.stable()) out.bias = ma.bias();
  else result.warnings.push_back(out.label + ": mean recursion unstable, rho(B) = " + std::to_string(ma.rho));
  const Index nl = model.nodes() * model.dim();
  if (nl > run.max_theory_dim) {
    result.warnings.push_back(out.label + ": NL = " + std::to_string(nl) +
                              " exceeds the mean-square analysis limit; theory curve skipped");
    return;
  }
  const MsArtifacts msa = ms_artifacts(ms, model, out.eta, run.max_theory_dim);
  out.ms = ms_stability(msa, ma, model, out.eta);
  if (!out.ms->stable)
    result.warnings.push_back(out.label + ": F is unstable, rho(F) = " + std::to_string(msa.rho_F));
  const VectorXd sigma = network_weight(model.nodes(), model.dim());
  out.theory = transient_msd(msa, ma, sigma, model.optimum, run.horizon);
  if (ma.stable() && out.ms->stable) out.zeta_star = steady_state_msd(msa, ma, sigma);
}

inline MonteCarloOptions mc_options(const RunSettings& run, bool per_cluster) {
  MonteCarloOptions opt;
  opt.horizon = run.horizon;
  opt.runs = run.runs;
  opt.seed = run.seed;
  opt.per_cluster = per_cluster;
  opt.average_from = run.average_from;
  return opt;
}

inline ScenarioResult run_regression(const ScenarioConfig& cfg) {
  const RegressionSetup& setup = *cfg.regression;
  const RunSettings& run = cfg.run;
  const BernoulliModel async_model(setup.net, setup.params);
  const FixedModel sync_model(async_model.means());
  const LinearDataSource source(setup.model);
  const bool simulate = run.mode != RunMode::Theory;
  const bool theory = run.mode != RunMode::Simulate;
  const bool per_cluster = run.weighting == Weighting::Cluster;

  ScenarioResult result;
  result.name = cfg.name;
  auto one = [&](bool async, double eta) {
    CurveResult c;
    c.label = curve_label(async, eta);
    c.async = async;
    c.eta = eta;
    const auto opt = mc_options(run, per_cluster);
    if (simulate)
      c.sim = async ? run_monte_carlo(setup.net, source, async_model, eta, opt)
                    : run_monte_carlo(setup.net, source, sync_model, eta, opt);
    if (theory)
      add_theory(c, async ? async_model.second_moments() : deterministic_moments(sync_model.means()), setup, run, result);
    result.curves.push_back(std::move(c));
  };
  for (double eta : run.etas) one(true, eta);
  if (run.sync_baseline) one(false, run.baseline_eta);
  return result;
}

inline ScenarioResult run_spectrum(const ScenarioConfig& cfg) {
  const RunSettings& run = cfg.run;
  const SpectrumModel model = build_spectrum_model(*cfg.spectrum);
  const BernoulliModel async_model(model.net, model.params);
  const FixedModel sync_model(async_model.means());
  ScenarioResult result;
  result.name = cfg.name;
  if (run.mode != RunMode::Simulate)
    result.warnings.push_back("spectrum scenarios are Monte-Carlo only; theory skipped");
  if (run.mode == RunMode::Theory) return result;
  const Index np = cfg.spectrum->primary_users(), nr = cfg.spectrum->antennas, l = model.net.dim();
  auto one = [&](bool async, double eta) {
    CurveResult c;
    c.label = curve_label(async, eta);
    c.async = async;
    c.eta = eta;
    const auto opt = mc_options(run, run.weighting == Weighting::Cluster);
    c.sim = async ? run_monte_carlo(model.net, model.source, async_model, eta, opt)
                  : run_monte_carlo(model.net, model.source, sync_model, eta, opt);
    for (Index u = 0; u < cfg.spectrum->secondary_users(); ++u) {
      VectorXd w = VectorXd::Zero(l);
      for (Index a = 0; a < nr; ++a) w += c.sim->mean_final_estimate.segment((u * nr + a) * l, l);
      c.psd.push_back(reconstructed_psd(w / static_cast<double>(nr), model.source.basis(), np));
    }
    result.curves.push_back(std::move(c));
  };
  for (double eta : run.etas) {
    one(true, eta);
    if (run.sync_baseline) one(false, eta);
  }
  return result;
}

}  // namespace scenario_detail

inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  if (cfg.kind == ScenarioKind::Spectrum) return scenario_detail::run_spectrum(cfg);
  return scenario_detail::run_regression(cfg);
}

inline ScenarioResult run_scenario(const std::string& preset) { return run_scenario(load_preset(preset)); }

namespace scenario_detail {

inline std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline double db_or_nan(double v) { return v > 0.0 ? 10.0 * std::log10(v) : std::numeric_limits<double>::quiet_NaN(); }

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace scenario_detail

/// CSV text for one curve: iteration, msd_sim_db, msd_theory_db[, msd_sim_c<q>_db...].
inline std::string curve_csv(const CurveResult& c) {
  using scenario_detail::fmt;
  std::ostringstream out;
  const std::size_t clusters = c.sim ? c.sim->cluster.size() : 0;
  out << "iteration,msd_sim_db,msd_theory_db";
  for (std::size_t q = 0; q < clusters; ++q) out << ",msd_sim_c" << q << "_db";
  out << '\n';
  const std::size_t rows = c.sim ? c.sim->msd.size() : c.theory.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < rows; ++i) {
    out << i << ',' << fmt(c.sim ? c.sim->db(i) : nan) << ','
        << fmt(i < c.theory.size() ? scenario_detail::db_or_nan(c.theory[i]) : nan);
    for (std::size_t q = 0; q < clusters; ++q) out << ',' << fmt(c.sim->cluster_db(q, i));
    out << '\n';
  }
  return out.str();
}

/// key=value metadata for one curve.
inline std::string curve_metadata(const CurveResult& c, std::uint64_t seed, long runs) {
  using scenario_detail::fmt;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream out;
  out << "rho_B=" << fmt(c.mean ? c.mean->rho : nan) << '\n'
      << "rho_F=" << fmt(c.ms ? c.ms->rho_F : nan) << '\n'
      << "bound_mean=" << fmt(c.mean ? c.mean->sufficient_bound : nan) << '\n'
      << "bound_ms=" << fmt(c.ms ? c.ms->sufficient_bound : nan) << '\n'
      << "zeta_star_db=" << fmt(c.zeta_star ? scenario_detail::db_or_nan(*c.zeta_star) : nan) << '\n'
      << "seed=" << seed << '\n'
      << "runs=" << runs << '\n';
  return out.str();
}

/// Writes <name>_<label>.csv and .meta per curve, plus a PSD table for
/// spectrum runs. Returns the written paths.
inline std::vector<std::filesystem::path> emit_csv(const ScenarioResult& result, const RunSettings& run,
                                                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& c : result.curves) {
    const auto stem = dir / (result.name + "_" + c.label);
    written.push_back(stem.string() + ".csv");
    scenario_detail::write_file(written.back(), curve_csv(c));
    written.push_back(stem.string() + ".meta");
    scenario_detail::write_file(written.back(), curve_metadata(c, run.seed, run.runs));
    if (!c.psd.empty()) {
      std::ostringstream out;
      out << "sample";
      for (std::size_t u = 0; u < c.psd.size(); ++u) out << ",su" << u;
      out << '\n';
      for (Index j = 0; j < c.psd.front().size(); ++j) {
        out << j;
        for (const auto& p : c.psd) out << ',' << scenario_detail::fmt(p(j));
        out << '\n';
      }
      written.push_back(stem.string() + "_psd.csv");
      scenario_detail::write_file(written.back(), out.str());
    }
  }
  return written;
}

}  // namespace mtdiff
