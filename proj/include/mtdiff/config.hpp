#pragma once

// Scenario files: INI sections [scenario], [network], [model], [async],
// [spectrum] and [run]. The value grammar is described in README.md.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <Eigen/Dense>

#include "mtdiff/activation.hpp"
#include "mtdiff/diffusion.hpp"
#include "mtdiff/error.hpp"
#include "mtdiff/network.hpp"
#include "mtdiff/rng.hpp"
#include "mtdiff/spectrum.hpp"
#include "mtdiff/theory.hpp"

namespace mtdiff {

enum class ScenarioKind { Regression, Spectrum };
enum class RunMode { Simulate, Theory, Both };
enum class Weighting { Network, Cluster };

struct RegressionSetup {
  ClusteredNetwork net;
  SignalModel model;
  BernoulliParams params;
};

struct RunSettings {
  std::vector<double> etas{0.0};  // one async (and optional sync) run per value
  double baseline_eta = 0.0;      // eta of the synchronous baseline
  bool sync_baseline = false;
  long horizon = 1000;
  long runs = 100;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::Both;
  Weighting weighting = Weighting::Network;
  long average_from = -1;
  Index max_theory_dim = kDefaultMaxTheoryDim;
};

struct ScenarioConfig {
  std::string name;
  ScenarioKind kind = ScenarioKind::Regression;
  std::optional<RegressionSetup> regression;
  std::optional<SpectrumScenario> spectrum;
  RunSettings run;
};

namespace config_detail {

using boost::property_tree::ptree;

struct Source {
  std::string path;
  std::string text;

  /// 1-based line of `key` inside `[section]`, 0 when not found.
  long line_of(const std::string& section, const std::string& key) const {
    std::istringstream in(text);
    std::string line, current;
    long n = 0;
    while (std::getline(in, line)) {
      ++n;
      const auto b = line.find_first_not_of(" \t");
      if (b == std::string::npos) continue;
      if (line[b] == '[') {
        current = line.substr(b + 1, line.find(']') - b - 1);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string k = line.substr(b, eq - b);
      k.erase(k.find_last_not_of(" \t") + 1);
      if (current == section && k == key) return n;
    }
    return 0;
  }
};

inline std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r\n"));
  s.erase(s.find_last_not_of(" \t\r\n") + 1);
  return s;
}

/// Whitespace or comma separated tokens.
inline std::vector<std::string> tokens(const std::string& s, const std::string& seps = " \t,") {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

class Reader {
 public:
  Reader(const ptree& tree, const Source& src) : tree_(tree), src_(src) {}

  bool has(const std::string& section, const std::string& key) const {
    return tree_.get_child_optional(section + "." + key).has_value();
  }
  bool has_section(const std::string& section) const { return tree_.get_child_optional(section).has_value(); }

  std::string raw(const std::string& section, const std::string& key) const {
    auto v = tree_.get_optional<std::string>(section + "." + key);
    if (!v) throw ParseError("missing key '" + key + "' in [" + section + "]", 0);
    return trim(*v);
  }
  std::string raw_or(const std::string& section, const std::string& key, const std::string& dflt) const {
    return has(section, key) ? raw(section, key) : dflt;
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& why) const {
    throw ParseError(src_.path + ": [" + section + "] " + key + ": " + why, src_.line_of(section, key));
  }

  double number(const std::string& section, const std::string& key, const std::string& text) const {
    const auto slash = text.find('/');
    try {
      std::size_t used = 0;
      if (slash != std::string::npos) {
        const double num = std::stod(text.substr(0, slash), &used);
        if (used != slash) throw std::invalid_argument("trailing");
        const std::string den_s = text.substr(slash + 1);
        const double den = std::stod(den_s, &used);
        if (used != den_s.size() || den == 0.0) throw std::invalid_argument("bad denominator");
        return num / den;
      }
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      fail(section, key, "'" + text + "' is not a number");
    }
  }

  double number(const std::string& section, const std::string& key) const {
    return number(section, key, raw(section, key));
  }
  double number_or(const std::string& section, const std::string& key, double dflt) const {
    return has(section, key) ? number(section, key) : dflt;
  }
  long integer(const std::string& section, const std::string& key) const {
    const double v = number(section, key);
    if (v != static_cast<double>(static_cast<long>(v))) fail(section, key, "expected an integer");
    return static_cast<long>(v);
  }
  long integer_or(const std::string& section, const std::string& key, long dflt) const {
    return has(section, key) ? integer(section, key) : dflt;
  }
  bool boolean_or(const std::string& section, const std::string& key, bool dflt) const {
    if (!has(section, key)) return dflt;
    const std::string v = raw(section, key);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail(section, key, "expected true or false");
  }
  std::vector<double> numbers(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const auto& t : tokens(raw(section, key))) out.push_back(number(section, key, t));
    return out;
  }

  /// Node-indexed values: "v" (all nodes), "v_0 ... v_{N-1}", "cluster: v_0 ... v_{Q-1}"
  /// or "uniform(a, b)" drawn from `rng`.
  VectorXd per_node(const std::string& section, const std::string& key, const ClusteredNetwork& net, Rng* rng) const {
    const std::string text = raw(section, key);
    const Index n = net.nodes();
    VectorXd out(n);
    if (text.rfind("uniform(", 0) == 0) {
      const auto close = text.find(')');
      const auto parts = tokens(text.substr(8, close - 8));
      if (close == std::string::npos || parts.size() != 2) fail(section, key, "expected uniform(a, b)");
      if (!rng) fail(section, key, "random values need a model seed");
      std::uniform_real_distribution<double> u(number(section, key, parts[0]), number(section, key, parts[1]));
      for (Index k = 0; k < n; ++k) out(k) = u(*rng);
      return out;
    }
    if (text.rfind("cluster:", 0) == 0) {
      const auto parts = tokens(text.substr(8));
      if (static_cast<Index>(parts.size()) != net.cluster_count())
        fail(section, key, "expected one value per cluster");
      for (Index k = 0; k < n; ++k)
        out(k) = number(section, key, parts[static_cast<std::size_t>(net.cluster_of(k))]);
      return out;
    }
    const auto parts = tokens(text);
    if (parts.size() == 1) return VectorXd::Constant(n, number(section, key, parts[0]));
    if (static_cast<Index>(parts.size()) != n) fail(section, key, "expected 1, N or per-cluster values");
    for (Index k = 0; k < n; ++k) out(k) = number(section, key, parts[static_cast<std::size_t>(k)]);
    return out;
  }

 private:
  const ptree& tree_;
  const Source& src_;
};

inline std::vector<Edge> parse_edges(const Reader& rd, const std::string& text) {
  std::vector<Edge> edges;
  for (const auto& t : tokens(text, " \t,")) {
    const auto dash = t.find('-');
    if (dash == std::string::npos || dash == 0) rd.fail("network", "edges", "edge '" + t + "' is not a-b");
    edges.emplace_back(static_cast<Index>(rd.number("network", "edges", t.substr(0, dash))),
                       static_cast<Index>(rd.number("network", "edges", t.substr(dash + 1))));
  }
  return edges;
}

inline std::vector<std::vector<Index>> parse_clusters(const Reader& rd, const std::string& text) {
  std::vector<std::vector<Index>> clusters;
  for (const auto& group : tokens(text, ";")) {
    std::vector<Index> members;
    for (const auto& t : tokens(group)) members.push_back(static_cast<Index>(rd.number("network", "clusters", t)));
    clusters.push_back(std::move(members));
  }
  return clusters;
}

inline std::vector<Point> parse_points(const Reader& rd, const std::string& key) {
  std::vector<Point> pts;
  for (const auto& t : tokens(rd.raw("spectrum", key), " \t")) {
    const auto parts = tokens(t, ",");
    if (parts.size() != 2) rd.fail("spectrum", key, "point '" + t + "' is not x,y");
    pts.push_back({rd.number("spectrum", key, parts[0]), rd.number("spectrum", key, parts[1])});
  }
  return pts;
}

/// Rethrows library validation failures as ValidationError.
template <class F>
auto validated(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError&) {
    throw;
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(e.code(), e.what());
  }
}

inline RegressionSetup read_regression(const Reader& rd) {
  RegressionSetup setup;
  const Index n = rd.integer("network", "nodes");
  const Index l = rd.integer("network", "dim");
  setup.net = validated([&] {
    return build_network(n, l, parse_edges(rd, rd.raw_or("network", "edges", "")),
                         parse_clusters(rd, rd.raw("network", "clusters")));
  });
  const ClusteredNetwork& net = setup.net;

  Rng model_rng = make_stream(static_cast<std::uint64_t>(rd.integer_or("model", "seed", 0)), 0, Stream::Scenario);
  const VectorXd rx = rd.per_node("model", "regressor_var", net, &model_rng);
  const VectorXd nz = rd.per_node("model", "noise_var", net, &model_rng);
  std::vector<MatrixXd> cov;
  for (Index k = 0; k < n; ++k) cov.push_back(rx(k) * MatrixXd::Identity(l, l));
  std::vector<VectorXd> tasks;
  for (Index q = 0; q < net.cluster_count(); ++q) {
    const std::string key = "task" + std::to_string(q);
    const auto v = rd.numbers("model", key);
    if (static_cast<Index>(v.size()) != l) rd.fail("model", key, "task vector must have dim entries");
    tasks.emplace_back(Eigen::Map<const VectorXd>(v.data(), l));
  }
  setup.model = validated([&] { return make_signal_model(net, std::move(cov), nz, tasks); });

  BernoulliParams& bp = setup.params;
  bp.step = rd.per_node("async", "step", net, nullptr);
  bp.step_prob = rd.per_node("async", "step_prob", net, nullptr);
  const std::string weights = rd.raw_or("async", "weights", "uniform-intra");
  const std::string reg = rd.raw_or("async", "reg", "uniform-inter");
  if (weights != "uniform-intra") rd.fail("async", "weights", "only uniform-intra is supported");
  if (reg != "uniform-inter") rd.fail("async", "reg", "only uniform-inter is supported");
  bp.weight = uniform_intra_weights(net);
  bp.reg = uniform_inter_factors(net);
  // Link probabilities are indexed by the receiving node.
  const VectorXd p = rd.per_node("async", "link_prob", net, nullptr);
  const VectorXd r = rd.per_node("async", "reg_prob", net, nullptr);
  bp.weight_prob = MatrixXd::Zero(n, n);
  bp.reg_prob = MatrixXd::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    for (Index j : net.neighborhood(k).intra_strict) bp.weight_prob(j, k) = p(k);
    for (Index j : net.neighborhood(k).inter) bp.reg_prob(k, j) = r(k);
  }
  validate(bp, net);
  return setup;
}

inline SpectrumScenario read_spectrum(const Reader& rd) {
  SpectrumScenario s;
  s.antennas = rd.integer_or("spectrum", "antennas", s.antennas);
  s.basis = rd.integer_or("spectrum", "basis", s.basis);
  s.freq_samples = rd.integer_or("spectrum", "freq_samples", s.freq_samples);
  s.basis_var = rd.number_or("spectrum", "basis_var", s.basis_var);
  s.primary = parse_points(rd, "primary");
  s.secondary = parse_points(rd, "secondary");
  for (std::size_t q = 0; q < s.primary.size(); ++q) {
    const std::string key = "alpha" + std::to_string(q);
    const auto v = rd.numbers("spectrum", key);
    if (static_cast<Index>(v.size()) > s.basis) rd.fail("spectrum", key, "more entries than basis functions");
    VectorXd a = VectorXd::Zero(s.basis);  // missing trailing entries are zero
    for (std::size_t j = 0; j < v.size(); ++j) a(static_cast<Index>(j)) = v[j];
    s.alpha.push_back(a);
  }
  s.threshold = rd.number("spectrum", "threshold");
  s.pathloss_rel_std = rd.number_or("spectrum", "pathloss_rel_std", s.pathloss_rel_std);
  s.noise_std = rd.number_or("spectrum", "noise_std", s.noise_std);
  s.link_decay = rd.number_or("spectrum", "link_decay", s.link_decay);
  s.neighbor_radius = rd.number("spectrum", "neighbor_radius");
  s.step = rd.number("spectrum", "step");
  s.step_prob = rd.number_or("spectrum", "step_prob", s.step_prob);
  s.intra_prob = rd.number_or("spectrum", "intra_prob", s.intra_prob);
  for (const auto& [key, v] : {std::pair{"step_prob", s.step_prob}, std::pair{"intra_prob", s.intra_prob}})
    if (!(v >= 0.0 && v <= 1.0))
      throw ValidationError(ErrorCode::ProbabilityRange, std::string(key) + " = " + std::to_string(v));
  return s;
}

inline RunSettings read_run(const Reader& rd) {
  RunSettings run;
  if (rd.has("run", "etas")) run.etas = rd.numbers("run", "etas");
  else run.etas = {rd.number_or("run", "eta", 0.0)};
  if (run.etas.empty()) rd.fail("run", "etas", "needs at least one value");
  run.sync_baseline = rd.boolean_or("run", "sync_baseline", false);
  run.baseline_eta = rd.number_or("run", "baseline_eta", run.etas.front());
  run.horizon = rd.integer_or("run", "horizon", run.horizon);
  run.runs = rd.integer_or("run", "runs", run.runs);
  run.seed = static_cast<std::uint64_t>(rd.integer_or("run", "seed", 0));
  run.average_from = rd.integer_or("run", "average_from", -1);
  run.max_theory_dim = rd.integer_or("run", "max_theory_dim", run.max_theory_dim);
  const std::string mode = rd.raw_or("run", "mode", "both");
  if (mode == "simulate") run.mode = RunMode::Simulate;
  else if (mode == "theory") run.mode = RunMode::Theory;
  else if (mode == "both") run.mode = RunMode::Both;
  else rd.fail("run", "mode", "expected simulate, theory or both");
  const std::string w = rd.raw_or("run", "weighting", "network");
  if (w == "network") run.weighting = Weighting::Network;
  else if (w == "cluster") run.weighting = Weighting::Cluster;
  else rd.fail("run", "weighting", "expected network or cluster");
  if (run.horizon < 1) rd.fail("run", "horizon", "must be at least 1");
  if (run.runs < 1) rd.fail("run", "runs", "must be at least 1");
  for (double eta : run.etas)
    if (!(eta >= 0.0)) rd.fail("run", "eta", "must be non-negative");
  return run;
}

}  // namespace config_detail

/// Parses a scenario from INI text. `origin` names the source in messages.
inline ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
  namespace pt = boost::property_tree;
  config_detail::Source src{origin, text};
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(origin + ": " + e.message(), static_cast<long>(e.line()));
  }
  const config_detail::Reader rd(tree, src);
  ScenarioConfig cfg;
  cfg.name = rd.raw_or("scenario", "name", std::filesystem::path(origin).stem().string());
  const std::string kind = rd.raw_or("scenario", "kind", "regression");
  if (kind == "regression") {
    cfg.kind = ScenarioKind::Regression;
    cfg.regression = config_detail::read_regression(rd);
  } else if (kind == "spectrum") {
    cfg.kind = ScenarioKind::Spectrum;
    cfg.spectrum = config_detail::read_spectrum(rd);
  } else {
    rd.fail("scenario", "kind", "expected regression or spectrum");
  }
  cfg.run = config_detail::read_run(rd);
  return cfg;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

#ifndef MTDIFF_PRESET_DIR
#define MTDIFF_PRESET_DIR "presets"
#endif

/// Preset directory: $MTDIFF_PRESETS if set, otherwise the source tree copy.
inline std::filesystem::path preset_dir() {
  if (const char* env = std::getenv("MTDIFF_PRESETS")) return env;
  return MTDIFF_PRESET_DIR;
}

inline ScenarioConfig load_preset(const std::string& name) {
  const auto path = preset_dir() / (name + ".ini");
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::IoError, "unknown preset '" + name + "' (" + path.string() + ")");
  return load_config(path);
}

}  // namespace mtdiff
