// Command-line front end: simulate, analyze, run presets, check moments.

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mtdiff/activation.hpp"
#include "mtdiff/config.hpp"
#include "mtdiff/error.hpp"
#include "mtdiff/scenario.hpp"
#include "mtdiff/spectrum.hpp"

namespace {

using namespace mtdiff;

struct Overrides {
  std::optional<long> runs;
  std::optional<long> horizon;
  std::optional<std::uint64_t> seed;
  std::optional<double> eta;
  std::string output_dir = "results";
  std::optional<bool> theory;
};

void apply(const Overrides& o, ScenarioConfig& cfg) {
  if (o.runs) cfg.run.runs = *o.runs;
  if (o.horizon) cfg.run.horizon = *o.horizon;
  if (o.seed) cfg.run.seed = *o.seed;
  if (o.eta) cfg.run.etas = {*o.eta};
  if (cfg.run.runs < 1 || cfg.run.horizon < 1)
    throw ValidationError(ErrorCode::ValidationError, "--runs and --horizon must be at least 1");
  if (o.theory) {
    if (*o.theory && cfg.run.mode == RunMode::Simulate) cfg.run.mode = RunMode::Both;
    if (!*o.theory) cfg.run.mode = RunMode::Simulate;
  }
}

std::string db(double linear) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f dB", 10.0 * std::log10(linear));
  return buf;
}

void report(const ScenarioResult& result, const RunSettings& run) {
  std::cout << "scenario " << result.name << '\n';
  for (const auto& c : result.curves) {
    std::cout << "  " << c.label << ':';
    if (c.sim) {
      const std::size_t h = c.sim->msd.size();
      const std::size_t from = h - std::max<std::size_t>(1, h / 10);
      std::cout << " sim(steady)=" << db(std::pow(10.0, c.sim->average_db(from, h) / 10.0));
    }
    if (c.zeta_star) std::cout << " theory(steady)=" << db(*c.zeta_star);
    if (c.mean) std::cout << " rho_B=" << c.mean->rho << " bound_mean=" << c.mean->sufficient_bound;
    if (c.ms) std::cout << " rho_F=" << c.ms->rho_F << " bound_ms=" << c.ms->sufficient_bound;
    std::cout << '\n';
  }
  for (const auto& w : result.warnings) std::cout << "  warning: " << w << '\n';
  std::cout << "  runs=" << run.runs << " horizon=" << run.horizon << " seed=" << run.seed << '\n';
}

int execute(ScenarioConfig cfg, const Overrides& o) {
  apply(o, cfg);
  const ScenarioResult result = run_scenario(cfg);
  report(result, cfg.run);
  for (const auto& p : emit_csv(result, cfg.run, o.output_dir)) std::cout << "  wrote " << p.string() << '\n';
  return 0;
}

int moments_check(const ScenarioConfig& cfg) {
  std::optional<SpectrumModel> spectrum;
  const ClusteredNetwork* net = nullptr;
  const BernoulliParams* params = nullptr;
  if (cfg.kind == ScenarioKind::Spectrum) {
    spectrum.emplace(build_spectrum_model(*cfg.spectrum));
    net = &spectrum->net;
    params = &spectrum->params;
  } else {
    net = &cfg.regression->net;
    params = &cfg.regression->params;
  }
  const MomentSet ms = moments(*params, *net);
  const StochasticityReport rep = verify_stochastic_moments(ms);
  std::cout << "E[A(x)A] column-sum deviation " << rep.a_column_deviation << ", min entry " << rep.a_min_entry << '\n'
            << "E[P(x)P] row-sum deviation    " << rep.p_row_deviation << ", min entry " << rep.p_min_entry << '\n'
            << "A left-stochastic: " << (rep.a_left_stochastic() ? "yes" : "no") << '\n'
            << "P right-stochastic: " << (rep.p_right_stochastic() ? "yes" : "no") << '\n';
  return rep.ok() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multitask diffusion LMS over asynchronous clustered networks"};
  app.require_subcommand(1);
  Overrides o;
  std::string config_path;
  std::string preset;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--runs", o.runs, "Monte-Carlo runs");
    sub->add_option("--horizon", o.horizon, "iterations");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--eta", o.eta, "regularization strength (replaces the configured list)");
    sub->add_option("--output-dir", o.output_dir, "directory for CSV and metadata files")->capture_default_str();
  };

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo learning curves only");
  sim->add_option("--config", config_path, "scenario file")->required();
  add_common(sim);

  auto* analyze = app.add_subcommand("analyze", "theoretical curves and stability reports only");
  analyze->add_option("--config", config_path, "scenario file")->required();
  add_common(analyze);

  auto* scen = app.add_subcommand("scenario", "run a shipped preset");
  scen->add_option("name", preset, "preset name (see presets/)")->required();
  add_common(scen);
  auto* theory_flag = scen->add_flag("--theory,!--no-theory", "compute theory curves (default as configured)");

  auto* mom = app.add_subcommand("moments-check", "verify the stochasticity of the second-order moments");
  mom->add_option("--config", config_path, "scenario file");
  mom->add_option("--preset", preset, "preset name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) {
      ScenarioConfig cfg = load_config(config_path);
      cfg.run.mode = RunMode::Simulate;
      return execute(std::move(cfg), o);
    }
    if (analyze->parsed()) {
      ScenarioConfig cfg = load_config(config_path);
      cfg.run.mode = RunMode::Theory;
      return execute(std::move(cfg), o);
    }
    if (scen->parsed()) {
      if (theory_flag->count() > 0) o.theory = theory_flag->as<bool>();
      return execute(load_preset(preset), o);
    }
    if (mom->parsed()) {
      if (config_path.empty() == preset.empty()) {
        std::cerr << "moments-check needs exactly one of --config or --preset\n";
        return 1;
      }
      return moments_check(config_path.empty() ? load_preset(preset) : load_config(config_path));
    }
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << (e.code() == ErrorCode::IoError ? "input error: " : "runtime error: ") << e.what() << '\n';
    return e.code() == ErrorCode::IoError ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
