#include <gtest/gtest.h>

#include "mtdiff/config.hpp"

using namespace mtdiff;

namespace {

const char* kBase = R"([scenario]
name = tiny
kind = regression

[network]
nodes = 4
dim = 2
clusters = 0 1; 2 3
edges = 0-1 1-2 2-3

[model]
seed = 5
regressor_var = 1
noise_var = 0.01
task0 = 1 0
task1 = 0 1

[async]
step = 1/20
step_prob = 0.8
link_prob = 0.6
reg_prob = 0.5

[run]
eta = 1
horizon = 50
runs = 3
)";

std::string with(const std::string& from, const std::string& to) {
  std::string text = kBase;
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

template <class E>
E expect_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const E& e) {
    return e;
  } catch (const std::exception& e) {
    ADD_FAILURE() << "unexpected error type: " << e.what();
    throw;
  }
  ADD_FAILURE() << "no error";
  throw std::logic_error("no error");
}

}  // namespace

TEST(Config, ParsesMinimalScenario) {
  const ScenarioConfig cfg = parse_config(kBase);
  EXPECT_EQ(cfg.name, "tiny");
  ASSERT_TRUE(cfg.regression);
  const RegressionSetup& s = *cfg.regression;
  EXPECT_EQ(s.net.nodes(), 4);
  EXPECT_EQ(s.net.cluster_count(), 2);
  EXPECT_DOUBLE_EQ(s.params.step(3), 0.05);
  EXPECT_DOUBLE_EQ(s.params.weight_prob(0, 1), 0.6);
  EXPECT_DOUBLE_EQ(s.params.reg_prob(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(s.params.reg(1, 2), 1.0);
  EXPECT_EQ(s.model.optimum, (VectorXd(8) << 1, 0, 1, 0, 0, 1, 0, 1).finished());
  EXPECT_EQ(cfg.run.etas, std::vector<double>{1.0});
  EXPECT_EQ(cfg.run.horizon, 50);
  EXPECT_EQ(cfg.run.mode, RunMode::Both);
}

TEST(Config, PerNodeForms) {
  const auto per_node = parse_config(with("step_prob = 0.8", "step_prob = 0.1 0.2 0.3 0.4"));
  EXPECT_EQ(per_node.regression->params.step_prob, (VectorXd(4) << 0.1, 0.2, 0.3, 0.4).finished());
  const auto per_cluster = parse_config(with("step_prob = 0.8", "step_prob = cluster: 0.9 0.3"));
  EXPECT_EQ(per_cluster.regression->params.step_prob, (VectorXd(4) << 0.9, 0.9, 0.3, 0.3).finished());
  const auto random = parse_config(with("regressor_var = 1", "regressor_var = uniform(0.5, 1.5)"));
  const auto again = parse_config(with("regressor_var = 1", "regressor_var = uniform(0.5, 1.5)"));
  for (Index k = 0; k < 4; ++k) {
    const double v = random.regression->model.regressor_cov[static_cast<std::size_t>(k)](0, 0);
    EXPECT_GE(v, 0.5);
    EXPECT_LE(v, 1.5);
    EXPECT_EQ(v, again.regression->model.regressor_cov[static_cast<std::size_t>(k)](0, 0));
  }
  const auto other_seed = parse_config(with("seed = 5\nregressor_var = 1", "seed = 6\nregressor_var = uniform(0.5, 1.5)"));
  EXPECT_NE(other_seed.regression->model.regressor_cov[0](0, 0), random.regression->model.regressor_cov[0](0, 0));
}

TEST(Config, UncoveredNodeIsValidationError) {
  const auto e = expect_error<ValidationError>(with("clusters = 0 1; 2 3", "clusters = 0 1; 2"));
  EXPECT_EQ(e.violated(), ErrorCode::UncoveredNode);
}

TEST(Config, OverlappingClustersIsValidationError) {
  const auto e = expect_error<ValidationError>(with("clusters = 0 1; 2 3", "clusters = 0 1 2; 2 3"));
  EXPECT_EQ(e.violated(), ErrorCode::OverlappingClusters);
}

TEST(Config, ProbabilityOutOfRange) {
  const auto e = expect_error<ValidationError>(with("link_prob = 0.6", "link_prob = 1.2"));
  EXPECT_EQ(e.violated(), ErrorCode::ProbabilityRange);
}

TEST(Config, NonNumericValueReportsLine) {
  const auto e = expect_error<ParseError>(with("horizon = 50", "horizon = fifty"));
  EXPECT_EQ(e.line(), 26);
  EXPECT_NE(std::string(e.what()).find("horizon"), std::string::npos);
}

TEST(Config, MalformedIniReportsLine) {
  const auto e = expect_error<ParseError>(with("[model]", "[model"));
  EXPECT_EQ(e.line(), 11);
}

TEST(Config, OtherParseErrors) {
  expect_error<ParseError>(with("edges = 0-1 1-2 2-3", "edges = 0-1 12 2-3"));
  expect_error<ParseError>(with("task1 = 0 1", "task1 = 0 1 2"));
  expect_error<ParseError>(with("eta = 1", "eta = 1\nmode = sometimes"));
  expect_error<ParseError>(with("nodes = 4\n", ""));
  expect_error<ParseError>(with("step = 1/20", "step = 1/0"));
  expect_error<ParseError>(with("runs = 3", "runs = 2.5"));
}

TEST(Config, EdgeOutOfRangeIsValidationError) {
  const auto e = expect_error<ValidationError>(with("edges = 0-1 1-2 2-3", "edges = 0-1 1-2 2-7"));
  EXPECT_EQ(e.violated(), ErrorCode::InvalidEdge);
}

TEST(Config, MissingFileIsIoError) {
  try {
    load_config("/nonexistent/scenario.ini");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
  EXPECT_THROW(load_preset("no-such-preset"), Error);
}

TEST(Config, ShippedPresetsLoad) {
  for (const char* name : {"illustrative-0idle", "illustrative-30idle", "illustrative-50idle", "benefit-eta0",
                           "benefit-eta1", "spectrum"}) {
    SCOPED_TRACE(name);
    const ScenarioConfig cfg = load_preset(name);
    EXPECT_EQ(cfg.name, name);
  }
  const auto ill = load_preset("illustrative-30idle");
  EXPECT_EQ(ill.regression->net.nodes(), 10);
  EXPECT_EQ(ill.regression->net.cluster_count(), 4);
  EXPECT_DOUBLE_EQ(ill.regression->params.step_prob(0), 0.7);
  const auto ben = load_preset("benefit-eta1");
  EXPECT_EQ(ben.regression->net.nodes(), 21);
  EXPECT_EQ(ben.regression->net.dim(), 9);
  EXPECT_EQ(ben.regression->net.cluster_count(), 3);
  EXPECT_EQ(ben.run.weighting, Weighting::Cluster);
  const auto spec = load_preset("spectrum");
  ASSERT_TRUE(spec.spectrum);
  EXPECT_EQ(spec.spectrum->primary_users(), 3);
  EXPECT_EQ(spec.spectrum->nodes(), 40);
  EXPECT_EQ(spec.spectrum->alpha[0].size(), spec.spectrum->basis);
  EXPECT_EQ(spec.run.etas, (std::vector<double>{0.0, 0.015}));
}
