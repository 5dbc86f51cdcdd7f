#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "gknn/graph.hpp"

using namespace gknn;

namespace {

PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> c(n * dim);
  for (auto& x : c) x = u(rng);
  return PointCloud(dim, std::move(c));
}

std::vector<Edge> brute_cutoff(const PointCloud& c, const Metric& m, double r, const WeightScheme& s) {
  std::vector<Edge> out;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      const double d = distance(m, c, i, j);
      if (d < r) out.push_back({vertex_id(i), vertex_id(j), apply_weight(s, d)});
    }
  return out;
}

// kNN lists from a full distance sort with (distance, id) ordering, then union.
std::set<std::pair<vertex_id, vertex_id>> brute_knn_pairs(const PointCloud& c, const Metric& m, std::size_t k) {
  std::set<std::pair<vertex_id, vertex_id>> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::vector<std::pair<double, vertex_id>> row;
    for (std::size_t j = 0; j < c.size(); ++j)
      if (j != i) row.push_back({distance(m, c, i, j), vertex_id(j)});
    std::sort(row.begin(), row.end());
    for (std::size_t t = 0; t < k; ++t)
      out.insert({std::min<vertex_id>(vertex_id(i), row[t].second), std::max<vertex_id>(vertex_id(i), row[t].second)});
  }
  return out;
}

std::set<std::pair<vertex_id, vertex_id>> pairs_of(const Graph& g) {
  std::set<std::pair<vertex_id, vertex_id>> out;
  for (const auto& e : g.edges()) out.insert({e.u, e.v});
  return out;
}

void expect_structurally_valid(const Graph& g) {
  for (std::size_t u = 0; u < g.num_vertices(); ++u) {
    const auto nb = g.neighbors(u);
    const auto w = g.weights(u);
    EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
    EXPECT_TRUE(std::adjacent_find(nb.begin(), nb.end()) == nb.end());
    for (std::size_t t = 0; t < nb.size(); ++t) {
      EXPECT_NE(nb[t], u);
      const auto back = g.neighbors(nb[t]);
      const auto it = std::lower_bound(back.begin(), back.end(), static_cast<vertex_id>(u));
      ASSERT_TRUE(it != back.end() && *it == u);
      EXPECT_EQ(g.weights(nb[t])[static_cast<std::size_t>(it - back.begin())], w[t]);
    }
  }
}

const PointCloud kLine = PointCloud(1, {0.0, 1.0, 3.0});

}  // namespace

TEST(GraphTest, FromEdgesBasics) {
  const Graph g = Graph::from_edges(4, {{2, 1, 0.5}, {0, 1, 1.0}, {3, 0, 2.0}});
  EXPECT_EQ(g.num_vertices(), 4u);
  EXPECT_EQ(g.num_edges(), 3u);
  EXPECT_EQ(g.num_directed_edges(), 6u);
  EXPECT_EQ(g.degree(0), 2u);
  EXPECT_EQ(std::vector<vertex_id>(g.neighbors(0).begin(), g.neighbors(0).end()), (std::vector<vertex_id>{1, 3}));
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1, 1.0}, {0, 3, 2.0}, {1, 2, 0.5}}));
  expect_structurally_valid(g);
}

TEST(GraphTest, FromEdgesRejects) {
  EXPECT_THROW(Graph::from_edges(2, {{0, 2, 1.0}}), data_error);
  EXPECT_THROW(Graph::from_edges(2, {{1, 1, 1.0}}), data_error);
  EXPECT_THROW(Graph::from_edges(2, {{0, 1, NAN}}), data_error);
  EXPECT_THROW(Graph::from_edges(2, {{0, 1, 1.0}, {1, 0, 1.0}}), data_error);
  EXPECT_TRUE(Graph::from_edges(2, {{0, 1, -1.0}}).has_negative_weight());
}

TEST(CutoffGraph, LineExample) {
  const Graph g = build_cutoff_graph(kLine, euclidean(), 1.5, RawDistance{});
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1, 1.0}}));
}

TEST(CutoffGraph, StrictInequality) {
  const Graph g = build_cutoff_graph(kLine, euclidean(), 1.0);
  EXPECT_EQ(g.num_edges(), 0u);
}

TEST(CutoffGraph, LargeRadiusGivesCompleteGraph) {
  std::mt19937_64 rng(1);
  const auto c = random_cloud(rng, 40, 3);
  EXPECT_EQ(build_cutoff_graph(c, euclidean(), 100.0).num_edges(), 40u * 39u / 2u);
}

TEST(CutoffGraph, Errors) {
  EXPECT_THROW(build_cutoff_graph(kLine, euclidean(), 0.0), std::invalid_argument);
  EXPECT_THROW(build_cutoff_graph(kLine, euclidean(), -1.0), std::invalid_argument);
  EXPECT_THROW(build_cutoff_graph(PointCloud(2, {}), euclidean(), 1.0), std::invalid_argument);
}

TEST(CutoffGraph, CircleMatchesPairScan) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  std::vector<double> c;
  for (int i = 0; i < 300; ++i) {
    const double a = u(rng);
    c.push_back(std::cos(a));
    c.push_back(std::sin(a));
  }
  const PointCloud cloud(2, c);
  const Graph g = build_cutoff_graph(cloud, euclidean(), 0.2);
  EXPECT_EQ(g.edges(), brute_cutoff(cloud, euclidean(), 0.2, RawDistance{}));
  expect_structurally_valid(g);
}

TEST(CutoffGraph, OtherMetricsAndSchemesMatchPairScan) {
  std::mt19937_64 rng(3);
  const Metric metrics[] = {Minkowski{1, 1}, Minkowski{2, 2}, Minkowski{3, 1}};
  for (const auto& m : metrics) {
    const auto c = random_cloud(rng, 120, 3);
    const WeightScheme s = AffineShift{0.05};
    EXPECT_EQ(build_cutoff_graph(c, m, 0.3, s).edges(), brute_cutoff(c, m, 0.3, s));
  }
}

TEST(CutoffGraph, PrecomputedMatrix) {
  const auto c = PointCloud::from_distance_matrix(3, {0, 1, 4, 1, 0, 2, 4, 2, 0});
  EXPECT_EQ(build_cutoff_graph(c, Precomputed{}, 2.5).edges(), (std::vector<Edge>{{0, 1, 1.0}, {1, 2, 2.0}}));
}

TEST(CutoffGraph, MonotoneInRadius) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    const auto c = random_cloud(rng, 80, 1 + t % 4);
    const double r1 = 0.05 + 0.3 * static_cast<double>(rng() % 100) / 100.0;
    const double r2 = r1 + 0.2 * static_cast<double>(rng() % 100) / 100.0;
    const auto a = pairs_of(build_cutoff_graph(c, euclidean(), r1));
    const auto b = pairs_of(build_cutoff_graph(c, euclidean(), r2));
    EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
  }
}

TEST(KnnGraph, LineExample) {
  const Graph g = build_symmetric_knn_graph(kLine, euclidean(), 1, RawDistance{});
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1, 1.0}, {1, 2, 2.0}}));
}

TEST(KnnGraph, FullKGivesCompleteGraph) {
  std::mt19937_64 rng(5);
  const auto c = random_cloud(rng, 25, 2);
  EXPECT_EQ(build_symmetric_knn_graph(c, euclidean(), 24).num_edges(), 25u * 24u / 2u);
}

TEST(KnnGraph, Errors) {
  EXPECT_THROW(build_symmetric_knn_graph(kLine, euclidean(), 3), std::invalid_argument);
  EXPECT_THROW(build_symmetric_knn_graph(kLine, euclidean(), 0), std::invalid_argument);
  EXPECT_THROW(build_symmetric_knn_graph(PointCloud(1, {0.0}), euclidean(), 1), std::invalid_argument);
}

TEST(KnnGraph, MatchesPairScan3D) {
  std::mt19937_64 rng(6);
  const auto c = random_cloud(rng, 200, 3);
  const Graph g = build_symmetric_knn_graph(c, euclidean(), 4);
  EXPECT_EQ(pairs_of(g), brute_knn_pairs(c, euclidean(), 4));
  for (const auto& e : g.edges()) EXPECT_EQ(e.weight, distance(euclidean(), c, e.u, e.v));
  expect_structurally_valid(g);
}

TEST(KnnGraph, MatchesPairScanWithTiesAndOtherMetrics) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    // Integer grid coordinates make distance ties common.
    std::vector<double> coords;
    const std::size_t n = 30 + rng() % 40, dim = 1 + rng() % 3;
    for (std::size_t i = 0; i < n * dim; ++i) coords.push_back(static_cast<double>(rng() % 5));
    const PointCloud c(dim, coords);
    for (const Metric& m : {euclidean(), Metric{Minkowski{1, 1}}}) {
      const std::size_t k = 1 + rng() % 6;
      const Graph g = build_symmetric_knn_graph(c, m, k, AffineShift{0.0});
      EXPECT_EQ(pairs_of(g), brute_knn_pairs(c, m, k));
      for (const auto& e : g.edges()) EXPECT_EQ(e.weight, 1.0);
      expect_structurally_valid(g);
    }
  }
}

TEST(KnnGraph, DegreeAtLeastKWithDistinctDistances) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto c = random_cloud(rng, 100, 2);
    const std::size_t k = 1 + t % 8;
    const Graph g = build_symmetric_knn_graph(c, euclidean(), k);
    for (std::size_t v = 0; v < g.num_vertices(); ++v) EXPECT_GE(g.degree(v), k);
  }
}

TEST(KnnGraph, DuplicatePointsGiveZeroWeightEdges) {
  const PointCloud c(1, {0.0, 0.0, 1.0, 5.0});
  const Graph g = build_symmetric_knn_graph(c, euclidean(), 1);
  EXPECT_EQ(g.edges().front(), (Edge{0, 1, 0.0}));
}

TEST(WeightSchemeTest, AffineZeroIsHopCount) {
  std::mt19937_64 rng(9);
  const auto c = random_cloud(rng, 50, 2);
  for (const auto& e : build_cutoff_graph(c, euclidean(), 0.4, AffineShift{0.0}).edges()) EXPECT_EQ(e.weight, 1.0);
  EXPECT_EQ(apply_weight(AffineShift{}, 2.0), 1.02);
}

TEST(Parsing, RulesAndSchemes) {
  EXPECT_EQ(std::get<CutoffRule>(parse_edge_rule("cutoff:0.25")).radius, 0.25);
  EXPECT_EQ(std::get<SymmetricKnnRule>(parse_edge_rule("knn:4")).k, 4u);
  EXPECT_EQ(to_string(parse_edge_rule("cutoff:0.1")), "cutoff:0.10000000000000001");
  EXPECT_EQ(to_string(parse_edge_rule("knn:7")), "knn:7");
  for (const char* bad : {"knn:0", "cutoff:0", "cutoff:-1", "knn:x", "knn:3.5", "ring:3", "knn"})
    EXPECT_THROW(parse_edge_rule(bad), std::invalid_argument) << bad;
  EXPECT_TRUE(std::holds_alternative<RawDistance>(parse_weight_scheme("raw")));
  EXPECT_EQ(std::get<AffineShift>(parse_weight_scheme("affine")).epsilon, 0.01);
  EXPECT_EQ(std::get<AffineShift>(parse_weight_scheme("affine:0")).epsilon, 0.0);
  EXPECT_THROW(parse_weight_scheme("affine:-1"), std::invalid_argument);
  EXPECT_THROW(parse_weight_scheme("log"), std::invalid_argument);
}

TEST(GraphIo, EmptyGraphRoundTrips) {
  const Graph g = Graph::from_edges(5, {});
  std::stringstream ss;
  write_graph(ss, g);
  EXPECT_EQ(ss.str(), "gknn-graph v1 5 0\n");
  EXPECT_EQ(read_graph(ss), g);
}

TEST(GraphIo, PathGraphRoundTrips) {
  const Graph g = Graph::from_edges(4, {{0, 1, 0.1}, {1, 2, 1.0 / 3.0}, {2, 3, 1e-300}});
  std::stringstream ss;
  write_graph(ss, g);
  EXPECT_EQ(read_graph(ss), g);
}

TEST(GraphIo, RandomLargeGraphRoundTripsBitExactly) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::set<std::pair<vertex_id, vertex_id>> seen;
  std::vector<Edge> edges;
  while (edges.size() < 10000) {
    vertex_id a = rng() % 3000, b = rng() % 3000;
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) continue;
    edges.push_back({a, b, u(rng) * std::pow(10.0, static_cast<double>(rng() % 20) - 10.0)});
  }
  const Graph g = Graph::from_edges(3000, edges);
  const std::string path = ::testing::TempDir() + "gknn_graph_roundtrip.txt";
  save_graph(g, path);
  const Graph h = load_graph(path);
  EXPECT_EQ(h, g);
  std::stringstream a, b;
  write_graph(a, g);
  write_graph(b, h);
  EXPECT_EQ(a.str(), b.str());
}

TEST(GraphIo, AcceptsEitherOrientationAndConsistentRepeats) {
  std::stringstream ss("gknn-graph v1 3 3\n1 0 0.5\n1 2 2\n0 1 0.5\n");
  const Graph g = read_graph(ss);
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1, 0.5}, {1, 2, 2.0}}));
}

TEST(GraphIo, RejectsMalformed) {
  const char* bad[] = {
      "",
      "gknn-graph v2 3 0\n",
      "graph 3 0\n",
      "gknn-graph v1 3 2\n0 1 1\n",
      "gknn-graph v1 3 1\n0 3 1\n",
      "gknn-graph v1 3 1\n0 1 abc\n",
      "gknn-graph v1 3 1\n0 0 1\n",
      "gknn-graph v1 3 1\n0 1 1\n1 2 1\n",
      "gknn-graph v1 3 2\n0 1 1\n1 0 2\n",
  };
  for (const char* text : bad) {
    std::stringstream ss(text);
    EXPECT_THROW(read_graph(ss), data_error) << text;
  }
  EXPECT_THROW(load_graph("/nonexistent/dir/g.txt"), data_error);
}
