#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mtdiff/scenario.hpp"

using namespace mtdiff;

namespace {

const char* kScenario = R"([scenario]
name = small
[network]
nodes = 4
dim = 2
clusters = 0 1; 2 3
edges = 0-1 1-2 2-3
[model]
regressor_var = 1
noise_var = 0.01
task0 = 1 0
task1 = 0.9 0.1
[async]
step = 0.05
step_prob = 0.8
link_prob = 0.6
reg_prob = 0.5
[run]
etas = 0 1
sync_baseline = true
baseline_eta = 1
horizon = 200
runs = 4
seed = 3
)";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Scenario, CurvesAndLabels) {
  const ScenarioResult r = run_scenario(parse_config(kScenario));
  ASSERT_EQ(r.curves.size(), 3u);
  EXPECT_EQ(r.curves[0].label, "async_eta0");
  EXPECT_EQ(r.curves[1].label, "async_eta1");
  EXPECT_EQ(r.curves[2].label, "sync_eta1");
  for (const auto& c : r.curves) {
    ASSERT_TRUE(c.sim);
    EXPECT_EQ(c.sim->msd.size(), 201u);
    EXPECT_EQ(c.theory.size(), 201u);
    ASSERT_TRUE(c.zeta_star);
    EXPECT_TRUE(c.mean->stable);
    EXPECT_TRUE(c.ms->stable);
  }
  EXPECT_LT(r.curve("async_eta0").bias->norm(), 1e-15);
  EXPECT_GT(r.curve("async_eta1").bias->norm(), 0.0);
  EXPECT_THROW(r.curve("missing"), Error);
}

TEST(Scenario, ModesSelectWork) {
  ScenarioConfig cfg = parse_config(kScenario);
  cfg.run.mode = RunMode::Simulate;
  const auto sim = run_scenario(cfg);
  EXPECT_TRUE(sim.curves[0].sim);
  EXPECT_TRUE(sim.curves[0].theory.empty());
  cfg.run.mode = RunMode::Theory;
  const auto th = run_scenario(cfg);
  EXPECT_FALSE(th.curves[0].sim);
  EXPECT_EQ(th.curves[0].theory.size(), 201u);
  cfg.run.max_theory_dim = 4;
  const auto skipped = run_scenario(cfg);
  EXPECT_TRUE(skipped.curves[0].theory.empty());
  EXPECT_FALSE(skipped.warnings.empty());
}

TEST(Scenario, CsvIsDeterministicWithFixedHeader) {
  const ScenarioConfig cfg = parse_config(kScenario);
  const auto a = run_scenario(cfg);
  const auto b = run_scenario(cfg);
  const std::string csv = curve_csv(a.curves[1]);
  EXPECT_EQ(csv, curve_csv(b.curves[1]));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,msd_sim_db,msd_theory_db");
  // Row 0 is the zero start: MSD = ||w*||^2 / N for both columns.
  const double start = 10.0 * std::log10((1.0 + 1.0 + 0.82 + 0.82) / 4.0);
  std::istringstream rows(csv);
  std::string header, row0;
  std::getline(rows, header);
  std::getline(rows, row0);
  char buf[64];
  std::snprintf(buf, sizeof buf, "0,%.9g,%.9g", start, start);
  EXPECT_EQ(row0, buf);

  const auto meta = curve_metadata(a.curves[1], cfg.run.seed, cfg.run.runs);
  EXPECT_NE(meta.find("rho_B="), std::string::npos);
  EXPECT_NE(meta.find("seed=3"), std::string::npos);
  EXPECT_NE(meta.find("runs=4"), std::string::npos);
}

TEST(Scenario, ClusterColumnsWhenRequested) {
  ScenarioConfig cfg = parse_config(kScenario);
  cfg.run.weighting = Weighting::Cluster;
  cfg.run.mode = RunMode::Simulate;
  const std::string csv = curve_csv(run_scenario(cfg).curves[0]);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,msd_sim_db,msd_theory_db,msd_sim_c0_db,msd_sim_c1_db");
  EXPECT_NE(csv.find(",nan,"), std::string::npos);
}

TEST(Scenario, EmitWritesFiles) {
  const ScenarioConfig cfg = parse_config(kScenario);
  const auto dir = std::filesystem::temp_directory_path() / "mtdiff_scenario_test";
  std::filesystem::remove_all(dir);
  const auto result = run_scenario(cfg);
  const auto written = emit_csv(result, cfg.run, dir);
  EXPECT_EQ(written.size(), 6u);
  EXPECT_EQ(slurp(dir / "small_async_eta1.csv"), curve_csv(result.curves[1]));
  EXPECT_TRUE(std::filesystem::exists(dir / "small_sync_eta1.meta"));
  std::filesystem::remove_all(dir);
}
