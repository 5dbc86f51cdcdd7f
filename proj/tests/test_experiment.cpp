#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gknn/experiment.hpp"
#include "support.hpp"

using namespace gknn;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.manifold = SwissRoll{1.5, 21.0, 0.005};
  c.n_values = {20, 40};
  c.m_values = {0, 100};
  c.graph_rule = SymmetricKnnRule{6};
  c.repetitions = 2;
  c.seed = 3;
  c.test_points = 50;
  return c;
}

const std::filesystem::path kGolden = GKNN_TEST_DATA_DIR;

}  // namespace

TEST(RateK, CeilOfPower) {
  EXPECT_EQ(rate_optimal_k(50, 2), 8u);    // 50^0.5 = 7.07
  EXPECT_EQ(rate_optimal_k(100, 2), 10u);  // exact square root stays 10
  EXPECT_EQ(rate_optimal_k(400, 2), 20u);
  EXPECT_EQ(rate_optimal_k(800, 2), 29u);
  EXPECT_EQ(rate_optimal_k(1000, 1), 100u);  // 1000^(2/3)
  EXPECT_EQ(rate_optimal_k(1, 2), 1u);
}

TEST(OlsSlope, ExactLine) {
  const std::vector<double> x{0, 1, 2, 3}, y{1, -1, -3, -5};
  EXPECT_DOUBLE_EQ(ols_slope(x, y), -2.0);
  EXPECT_THROW(ols_slope(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
}

TEST(OlsSlope, PowerLawRecoversExponent) {
  std::vector<double> x, y;
  for (double n : {50.0, 100.0, 200.0, 400.0, 800.0}) {
    x.push_back(std::log(n));
    y.push_back(std::log(3.0 * std::pow(n, -0.5)));
  }
  EXPECT_NEAR(ols_slope(x, y), -0.5, 1e-12);
}

TEST(ConfigJson, RoundTrip) {
  ExperimentConfig c = tiny_config();
  c.k = 7;
  c.weight_scheme = AffineShift{0.02};
  c.regression_weights = RegressionWeights::exp2;
  c.algorithm = Algorithm::alg1;
  c.distance_pairs = 10;
  const json j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
  EXPECT_EQ(j["k"], 7);
  EXPECT_EQ(config_to_json(tiny_config())["k"], "auto");
}

TEST(ConfigJson, OptionalFieldsDefault) {
  const json j = json::parse(R"({"manifold":{"type":"circle"},"n_values":[10],"m_values":[0],"k":3,
      "graph_rule":"cutoff:0.5","sigma":0,"L":2,"repetitions":1,"seed":1})");
  const auto c = config_from_json(j);
  EXPECT_EQ(std::get<Circle>(c.manifold).radius, 1.0);
  EXPECT_EQ(c.test_points, 1000u);
  EXPECT_EQ(c.algorithm, Algorithm::alg2);
  EXPECT_EQ(c.lipschitz, 2.0);
}

TEST(ConfigJson, RejectsInvalid) {
  const char* bad[] = {
      R"({"n_values":[10],"m_values":[0],"k":3,"graph_rule":"knn:2","sigma":0,"L":1,"repetitions":1,"seed":1})",
      R"({"manifold":{"type":"cube"},"n_values":[10],"m_values":[0],"k":3,"graph_rule":"knn:2","sigma":0,"L":1,"repetitions":1,"seed":1})",
      R"({"manifold":{"type":"circle"},"n_values":[],"m_values":[0],"k":3,"graph_rule":"knn:2","sigma":0,"L":1,"repetitions":1,"seed":1})",
      R"({"manifold":{"type":"circle"},"n_values":[10],"m_values":[0],"k":0,"graph_rule":"knn:2","sigma":0,"L":1,"repetitions":1,"seed":1})",
      R"({"manifold":{"type":"circle"},"n_values":[10],"m_values":[0],"k":"big","graph_rule":"knn:2","sigma":0,"L":1,"repetitions":1,"seed":1})",
      R"({"manifold":{"type":"circle"},"n_values":[10],"m_values":[0],"k":3,"graph_rule":"knn:2","sigma":-1,"L":1,"repetitions":1,"seed":1})",
      R"({"manifold":{"type":"circle"},"n_values":[10],"m_values":[0],"k":3,"graph_rule":"knn:2","sigma":0,"L":1,"repetitions":0,"seed":1})",
      R"({"manifold":{"type":"circle"},"n_values":[10],"m_values":[0],"k":3,"graph_rule":"knn:10","sigma":0,"L":1,"repetitions":1,"seed":1})",
      R"({"manifold":{"type":"circle"},"n_values":[10],"m_values":[0],"k":3,"graph_rule":"knn:2","sigma":"x","L":1,"repetitions":1,"seed":1})",
  };
  for (const char* text : bad) EXPECT_THROW(config_from_json(json::parse(text)), std::invalid_argument) << text;
}

TEST(RateExperiment, ReportShapeAndInvariants) {
  auto cfg = tiny_config();
  cfg.distance_pairs = 30;
  const auto r = run_rate_experiment(cfg, 1);
  ASSERT_EQ(r.cells.size(), 2u * 2u * 2u);
  EXPECT_EQ(r.summary.size(), 4u);
  EXPECT_EQ(r.slopes.size(), 2u);
  EXPECT_EQ(r.aborted_cells, 0u);
  EXPECT_EQ(r.pop_bound_violations, 0u);
  EXPECT_EQ(r.monotone_violations, 0u);
  EXPECT_EQ(r.target_slope(), -0.5);
  for (const auto& c : r.cells) {
    EXPECT_GE(c.mse_geodesic, 0.0);
    EXPECT_GE(c.mse_euclidean, 0.0);
    EXPECT_EQ(c.k, rate_optimal_k(c.n, 2));
    EXPECT_LE(c.stats.pops, c.pop_bound);
    ASSERT_EQ(c.distance.has_value(), c.rep == 0);
    if (c.distance) {
      EXPECT_GE(c.distance->fraction_in_bounds, 0.0);
      EXPECT_LE(c.distance->fraction_in_bounds, 1.0);
    }
  }
  // The Euclidean baseline only sees labeled points, so it does not depend on m.
  for (const auto& a : r.cells)
    for (const auto& b : r.cells) {
      if (a.n == b.n && a.rep == b.rep) {
        EXPECT_EQ(a.mse_euclidean, b.mse_euclidean);
      }
    }
}

// Mean over repetitions, then the slope of log mean MSE on log n.
TEST(RateExperiment, SummaryMatchesCells) {
  const auto r = run_rate_experiment(tiny_config(), 1);
  for (const auto& s : r.summary) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& c : r.cells)
      if (c.n == s.n && c.m == s.m) sum += c.mse_geodesic, ++count;
    EXPECT_EQ(s.reps_used, count);
    EXPECT_DOUBLE_EQ(s.mean_mse_geodesic, sum / static_cast<double>(count));
  }
  for (const auto& sl : r.slopes) {
    std::vector<double> x, y;
    for (const auto& s : r.summary)
      if (s.m == sl.m) x.push_back(std::log(static_cast<double>(s.n))), y.push_back(std::log(s.mean_mse_geodesic));
    EXPECT_DOUBLE_EQ(sl.slope_geodesic, ols_slope(x, y));
  }
}

TEST(RateExperiment, NoiselessDenseLabelsConverge) {
  ExperimentConfig c;
  c.manifold = Circle{1.0};
  c.n_values = {50, 200, 800};
  c.m_values = {0};
  c.k = 1;
  c.graph_rule = SymmetricKnnRule{2};
  c.sigma = 0.0;
  c.repetitions = 2;
  c.test_points = 200;
  const auto r = run_rate_experiment(c, 1);
  EXPECT_GT(r.summary[0].mean_mse_geodesic, r.summary[1].mean_mse_geodesic);
  EXPECT_GT(r.summary[1].mean_mse_geodesic, r.summary[2].mean_mse_geodesic);
  EXPECT_LT(r.summary[2].mean_mse_geodesic, 1e-4);
}

TEST(RateExperiment, UnreachableCellsAbortWithDiagnostic) {
  ExperimentConfig c;
  c.manifold = Circle{1.0};
  c.n_values = {2};
  c.m_values = {400};
  c.k = 1;
  c.graph_rule = CutoffRule{0.001};  // almost no edges
  c.repetitions = 1;
  c.test_points = 100;
  const auto r = run_rate_experiment(c, 1);
  EXPECT_EQ(r.aborted_cells, 1u);
  EXPECT_TRUE(r.cells[0].aborted);
  EXPECT_FALSE(r.cells[0].diagnostic.empty());
  EXPECT_GT(r.cells[0].unreachable_fraction, 0.1);
  EXPECT_EQ(r.summary[0].reps_used, 0u);
}

TEST(RateExperiment, ThreadCountDoesNotChangeReport) {
  const auto cfg = tiny_config();
  EXPECT_EQ(report_to_json(run_rate_experiment(cfg, 1)).dump(), report_to_json(run_rate_experiment(cfg, 3)).dump());
}

TEST(RateExperiment, AlgorithmChoiceDoesNotChangeMse) {
  auto cfg = tiny_config();
  const auto a = run_rate_experiment(cfg, 1);
  cfg.algorithm = Algorithm::naive;
  const auto b = run_rate_experiment(cfg, 1);
  for (std::size_t i = 0; i < a.cells.size(); ++i) EXPECT_EQ(a.cells[i].mse_geodesic, b.cells[i].mse_geodesic);
}

TEST(RateExperiment, MatchesGoldenReport) {
  const auto cfg = load_config((kGolden / "small_config.json").string());
  const auto dir = std::filesystem::path(::testing::TempDir()) / "gknn_golden_run";
  write_report(run_rate_experiment(cfg, 2), dir);
  EXPECT_EQ(slurp(dir / "report.json"), slurp(kGolden / "small_report.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "cells.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "summary.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "timings.csv"));
}

TEST(SpeedBenchmark, SingleLabelAlgorithmsComparable) {
  const auto in = make_manifold_benchmark(SwissRoll{}, 20000, 1, SymmetricKnnRule{4}, 5);
  const auto b = run_speed_benchmark(in.graph, in.labels, 7);
  EXPECT_TRUE(b.tables_match);
  ASSERT_EQ(b.rows.size(), 3u);
  EXPECT_EQ(b.rows[0].stats.pops, b.rows[1].stats.pops);
  EXPECT_EQ(b.rows[0].stats.pops, b.rows[2].stats.pops);
  for (const auto& r : b.rows) EXPECT_LE(r.stats.pops, r.pop_bound);
}

TEST(SpeedBenchmark, CsvHasOneRowPerAlgorithm) {
  std::mt19937_64 rng(9);
  const Graph g = gknn::testing::random_graph(rng, 300, 900);
  const auto b = run_speed_benchmark(g, gknn::testing::random_labels(rng, 300, 30), 3);
  std::ostringstream os;
  write_benchmark_csv(os, b);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_NE(text.find("\nnaive,300,"), std::string::npos);
  EXPECT_NE(text.find("\nalg2,300,"), std::string::npos);
}

TEST(BundledConfigs, AllLoad) {
  std::size_t count = 0;
  for (const auto& e : std::filesystem::directory_iterator(GKNN_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
    ++count;
  }
  EXPECT_GE(count, 3u);
}
