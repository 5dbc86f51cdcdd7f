// Shared generators and independent oracles for the test binaries.
#pragma once

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "gknn/geodesic_knn.hpp"

namespace gknn::testing {

struct Instance {
  Graph graph;
  LabelSet labels;
  std::size_t k;
};

// Random simple graph with up to max_edges edges. Weights are uniform in
// [0, 1] with ~10% forced to zero. With dyadic set, weights are multiples of
// 1/64 so every path sum is exact and ties between paths are exact too.
inline Graph random_graph(std::mt19937_64& rng, std::size_t n_vertices, std::size_t n_edges, bool dyadic = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::set<std::pair<vertex_id, vertex_id>> seen;
  std::vector<Edge> edges;
  const std::size_t max_pairs = n_vertices * (n_vertices - 1) / 2;
  n_edges = std::min(n_edges, max_pairs);
  while (edges.size() < n_edges) {
    vertex_id a = static_cast<vertex_id>(rng() % n_vertices), b = static_cast<vertex_id>(rng() % n_vertices);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) continue;
    double w = u(rng);
    if (dyadic) w = static_cast<double>(rng() % 65) / 64.0;
    if (rng() % 10 == 0) w = 0.0;
    edges.push_back({a, b, w});
  }
  return Graph::from_edges(n_vertices, std::move(edges));
}

inline LabelSet random_labels(std::mt19937_64& rng, std::size_t n_vertices, std::size_t n) {
  std::vector<vertex_id> all(n_vertices);
  for (std::size_t i = 0; i < n_vertices; ++i) all[i] = static_cast<vertex_id>(i);
  std::shuffle(all.begin(), all.end(), rng);
  std::normal_distribution<double> y;
  std::vector<std::pair<vertex_id, double>> out;
  for (std::size_t i = 0; i < std::min(n, n_vertices); ++i) out.push_back({all[i], y(rng)});
  return LabelSet(std::move(out));
}

// All-pairs distances by Floyd-Warshall over a dense matrix.
inline std::vector<std::vector<double>> floyd_warshall(const Graph& g) {
  const std::size_t n = g.num_vertices();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (const auto& e : g.edges()) {
    d[e.u][e.v] = std::min(d[e.u][e.v], e.weight);
    d[e.v][e.u] = std::min(d[e.v][e.u], e.weight);
  }
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i][m] == inf) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][m] + d[m][j] < d[i][j]) d[i][j] = d[i][m] + d[m][j];
    }
  return d;
}

// Single-source distances by Bellman-Ford edge relaxation to a fixed point.
inline std::vector<double> bellman_ford(const Graph& g, vertex_id source) {
  std::vector<double> d(g.num_vertices(), std::numeric_limits<double>::infinity());
  d[source] = 0.0;
  const auto edges = g.edges();
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& e : edges) {
      if (d[e.u] + e.weight < d[e.v]) d[e.v] = d[e.u] + e.weight, changed = true;
      if (d[e.v] + e.weight < d[e.u]) d[e.u] = d[e.v] + e.weight, changed = true;
    }
  }
  return d;
}

// Table from per-seed distance arrays: for each vertex, the k reachable seeds
// that are smallest by (distance, seed id).
inline NeighborTable table_from_rows(std::size_t n_vertices, const LabelSet& labels,
                                     const std::vector<std::vector<double>>& seed_rows, std::size_t k) {
  std::vector<std::vector<Neighbor>> lists(n_vertices);
  for (std::size_t v = 0; v < n_vertices; ++v) {
    std::vector<Neighbor> all;
    for (std::size_t s = 0; s < labels.size(); ++s)
      if (seed_rows[s][v] != std::numeric_limits<double>::infinity()) all.push_back({labels.ids()[s], seed_rows[s][v]});
    std::sort(all.begin(), all.end(), canonical_less);
    if (all.size() > k) all.resize(k);
    lists[v] = std::move(all);
  }
  return NeighborTable(lists);
}

inline NeighborTable floyd_warshall_table(const Graph& g, const LabelSet& labels, std::size_t k) {
  const auto d = floyd_warshall(g);
  std::vector<std::vector<double>> rows;
  for (vertex_id s : labels.ids()) rows.push_back(d[s]);
  return table_from_rows(g.num_vertices(), labels, rows, k);
}

inline NeighborTable bellman_ford_table(const Graph& g, const LabelSet& labels, std::size_t k) {
  std::vector<std::vector<double>> rows;
  for (vertex_id s : labels.ids()) rows.push_back(bellman_ford(g, s));
  return table_from_rows(g.num_vertices(), labels, rows, k);
}

}  // namespace gknn::testing
