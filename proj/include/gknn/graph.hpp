#pragma once

// Undirected weighted neighborhood graphs: CSR storage, the cutoff and
// symmetric-kNN edge rules, and the text edge-list file format.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "gknn/errors.hpp"
#include "gknn/metric_space.hpp"

namespace gknn {

struct Edge {
  vertex_id u;
  vertex_id v;
  double weight;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Immutable undirected graph in CSR layout. Every undirected edge appears in
/// both endpoint lists with the same weight; lists are sorted by neighbor id.
class Graph {
public:
  Graph() = default;

  /// Builds from an undirected edge list (either orientation). Rejects
  /// self-loops, out-of-range ids, non-finite weights and repeated pairs.
  static Graph from_edges(std::size_t num_vertices, std::vector<Edge> edges) {
    for (auto& e : edges) {
      detail::require_data(e.u < num_vertices && e.v < num_vertices, "edge endpoint out of range");
      detail::require_data(e.u != e.v, "self-loops are not allowed");
      detail::require_data(std::isfinite(e.weight), "edge weight must be finite");
      if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    for (std::size_t i = 1; i < edges.size(); ++i)
      detail::require_data(edges[i].u != edges[i - 1].u || edges[i].v != edges[i - 1].v,
                           "duplicate edge (" + std::to_string(edges[i].u) + "," + std::to_string(edges[i].v) + ")");

    Graph g;
    g.offsets_.assign(num_vertices + 1, 0);
    for (const auto& e : edges) {
      ++g.offsets_[e.u + 1];
      ++g.offsets_[e.v + 1];
    }
    for (std::size_t i = 0; i < num_vertices; ++i) g.offsets_[i + 1] += g.offsets_[i];
    g.targets_.resize(edges.size() * 2);
    g.weights_.resize(edges.size() * 2);
    std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
    // Sorted (u,v) input makes each list come out sorted: lower neighbors of
    // x arrive (as e.u) in ascending order before any higher neighbor.
    for (const auto& e : edges) {
      g.targets_[fill[e.v]] = e.u;
      g.weights_[fill[e.v]++] = e.weight;
    }
    for (const auto& e : edges) {
      g.targets_[fill[e.u]] = e.v;
      g.weights_[fill[e.u]++] = e.weight;
    }
    return g;
  }

  std::size_t num_vertices() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return targets_.size() / 2; }
  std::size_t num_directed_edges() const noexcept { return targets_.size(); }
  std::size_t degree(std::size_t v) const { return offsets_[v + 1] - offsets_[v]; }

  std::span<const vertex_id> neighbors(std::size_t v) const {
    return {targets_.data() + offsets_[v], degree(v)};
  }
  std::span<const double> weights(std::size_t v) const { return {weights_.data() + offsets_[v], degree(v)}; }

  /// Undirected edges with u < v, sorted by (u, v).
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(num_edges());
    for (std::size_t u = 0; u < num_vertices(); ++u) {
      const auto nb = neighbors(u);
      const auto w = weights(u);
      for (std::size_t t = 0; t < nb.size(); ++t)
        if (u < nb[t]) out.push_back({static_cast<vertex_id>(u), nb[t], w[t]});
    }
    return out;
  }

  bool has_negative_weight() const {
    return std::any_of(weights_.begin(), weights_.end(), [](double w) { return w < 0.0; });
  }

  friend bool operator==(const Graph&, const Graph&) = default;

private:
  std::vector<std::size_t> offsets_;
  std::vector<vertex_id> targets_;
  std::vector<double> weights_;
};

struct CutoffRule {
  double radius;
};
struct SymmetricKnnRule {
  std::size_t k;
};
using EdgeRule = std::variant<CutoffRule, SymmetricKnnRule>;

struct RawDistance {};
/// w = 1 + epsilon * d; epsilon = 0 gives hop-count geodesics.
struct AffineShift {
  double epsilon = 0.01;
};
using WeightScheme = std::variant<RawDistance, AffineShift>;

inline double apply_weight(const WeightScheme& scheme, double d) {
  if (const auto* a = std::get_if<AffineShift>(&scheme)) return 1.0 + a->epsilon * d;
  return d;
}

namespace detail {

inline void check_scheme(const WeightScheme& scheme) {
  if (const auto* a = std::get_if<AffineShift>(&scheme))
    require(a->epsilon >= 0.0 && std::isfinite(a->epsilon), "affine epsilon must be >= 0");
}

// The tree path is taken only for the plain Euclidean metric so that its
// tie-breaking matches the brute-force path bit for bit.
inline bool can_use_index(const PointCloud& cloud, const Metric& metric) {
  const auto* mk = std::get_if<Minkowski>(&metric);
  return mk != nullptr && mk->p == 2.0 && mk->q == 1.0 && cloud.has_coordinates() &&
         cloud.dim() <= SpatialIndex::kMaxTreeDim;
}

}  // namespace detail

/// Edge (i, j) iff d(x_i, x_j) < radius.
inline Graph build_cutoff_graph(const PointCloud& cloud, const Metric& metric, double radius,
                                const WeightScheme& scheme = RawDistance{}) {
  detail::require(radius > 0.0, "cutoff radius must be > 0");
  detail::require(!cloud.empty(), "cannot build a graph over an empty cloud");
  validate(metric);
  detail::check_scheme(scheme);
  const std::size_t n = cloud.size();
  std::vector<Edge> edges;
  if (detail::can_use_index(cloud, metric)) {
    const SpatialIndex index(cloud);
    for (std::size_t i = 0; i < n; ++i)
      for (vertex_id j : index.range_query(cloud.point(i), radius)) {
        if (j <= i) continue;
        edges.push_back({static_cast<vertex_id>(i), j, apply_weight(scheme, distance(metric, cloud, i, j))});
      }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = distance(metric, cloud, i, j);
        if (d < radius) edges.push_back({static_cast<vertex_id>(i), static_cast<vertex_id>(j), apply_weight(scheme, d)});
      }
  }
  return Graph::from_edges(n, std::move(edges));
}

/// Edge (i, j) iff j is among the k nearest of i or i among the k nearest of
/// j. Neighbor ties are broken by ascending vertex id.
inline Graph build_symmetric_knn_graph(const PointCloud& cloud, const Metric& metric, std::size_t k,
                                       const WeightScheme& scheme = RawDistance{}) {
  detail::require(k >= 1, "k_G must be >= 1");
  detail::require(cloud.size() >= 2, "symmetric kNN graph needs at least two points");
  detail::require(k < cloud.size(), "k_G must be < N");
  validate(metric);
  detail::check_scheme(scheme);
  const std::size_t n = cloud.size();
  std::vector<Edge> edges;
  edges.reserve(n * k);
  auto add = [&](std::size_t i, std::size_t j, double d) {
    edges.push_back({static_cast<vertex_id>(std::min(i, j)), static_cast<vertex_id>(std::max(i, j)), apply_weight(scheme, d)});
  };
  if (detail::can_use_index(cloud, metric)) {
    const SpatialIndex index(cloud);
    for (std::size_t i = 0; i < n; ++i) {
      auto nn = index.knn_query(cloud.point(i), k + 1);
      std::size_t taken = 0;
      for (const auto& c : nn) {
        if (c.id == i || taken == k) continue;
        add(i, c.id, c.distance);
        ++taken;
      }
    }
  } else {
    std::vector<std::pair<double, vertex_id>> row;
    for (std::size_t i = 0; i < n; ++i) {
      row.clear();
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) row.emplace_back(distance(metric, cloud, i, j), static_cast<vertex_id>(j));
      std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
      for (std::size_t t = 0; t < k; ++t) add(i, row[t].second, row[t].first);
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  edges.erase(std::unique(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.u == b.u && a.v == b.v; }),
              edges.end());
  return Graph::from_edges(n, std::move(edges));
}

inline Graph build_graph(const PointCloud& cloud, const Metric& metric, const EdgeRule& rule,
                         const WeightScheme& scheme = RawDistance{}) {
  if (const auto* c = std::get_if<CutoffRule>(&rule)) return build_cutoff_graph(cloud, metric, c->radius, scheme);
  return build_symmetric_knn_graph(cloud, metric, std::get<SymmetricKnnRule>(rule).k, scheme);
}

// "cutoff:<r>" or "knn:<k>"
inline EdgeRule parse_edge_rule(const std::string& text) {
  const auto colon = text.find(':');
  detail::require(colon != std::string::npos, "edge rule must look like cutoff:<r> or knn:<k>, got '" + text + "'");
  const std::string kind = text.substr(0, colon), value = text.substr(colon + 1);
  try {
    std::size_t used = 0;
    if (kind == "cutoff") {
      const double r = std::stod(value, &used);
      detail::require(used == value.size() && r > 0.0, "cutoff radius must be > 0");
      return CutoffRule{r};
    }
    if (kind == "knn") {
      const long long k = std::stoll(value, &used);
      detail::require(used == value.size() && k >= 1, "knn k_G must be >= 1");
      return SymmetricKnnRule{static_cast<std::size_t>(k)};
    }
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("bad edge rule '" + text + "'");
}

inline std::string to_string(const EdgeRule& rule) {
  if (const auto* c = std::get_if<CutoffRule>(&rule)) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "cutoff:%.17g", c->radius);
    return buf;
  }
  return "knn:" + std::to_string(std::get<SymmetricKnnRule>(rule).k);
}

// "raw", "affine" (epsilon 0.01) or "affine:<epsilon>"
inline WeightScheme parse_weight_scheme(const std::string& text) {
  if (text == "raw") return RawDistance{};
  if (text == "affine") return AffineShift{};
  if (text.rfind("affine:", 0) == 0) {
    try {
      std::size_t used = 0;
      const std::string value = text.substr(7);
      const double eps = std::stod(value, &used);
      if (used == value.size() && eps >= 0.0) return AffineShift{eps};
    } catch (const std::exception&) {
    }
  }
  throw std::invalid_argument("bad weight scheme '" + text + "' (expected raw, affine or affine:<eps>)");
}

inline std::string to_string(const WeightScheme& scheme) {
  if (const auto* a = std::get_if<AffineShift>(&scheme)) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "affine:%.17g", a->epsilon);
    return buf;
  }
  return "raw";
}

// ---------------------------------------------------------------------------
// Text edge-list format:
//   gknn-graph v1 <N> <E>
//   <i> <j> <weight>      (E lines, i < j, weight with 17 significant digits)
// ---------------------------------------------------------------------------

inline void write_graph(std::ostream& os, const Graph& g) {
  os << "gknn-graph v1 " << g.num_vertices() << ' ' << g.num_edges() << '\n';
  char buf[64];
  for (const auto& e : g.edges()) {
    std::snprintf(buf, sizeof buf, "%.17g", e.weight);
    os << e.u << ' ' << e.v << ' ' << buf << '\n';
  }
}

/// Lines may list an edge in either orientation; the same pair appearing with
/// two different weights is rejected as asymmetric.
inline Graph read_graph(std::istream& is) {
  std::string line;
  detail::require_data(static_cast<bool>(std::getline(is, line)), "graph file is empty");
  std::istringstream header(line);
  std::string magic, version;
  long long n = -1, e = -1;
  header >> magic >> version >> n >> e;
  detail::require_data(header && magic == "gknn-graph" && version == "v1" && n >= 0 && e >= 0,
                       "malformed graph header: '" + line + "'");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(e));
  for (long long t = 0; t < e; ++t) {
    detail::require_data(static_cast<bool>(std::getline(is, line)), "graph file truncated: expected " + std::to_string(e) + " edges");
    std::istringstream ls(line);
    long long i = -1, j = -1;
    std::string wtext;
    ls >> i >> j >> wtext;
    detail::require_data(ls && i >= 0 && j >= 0 && i < n && j < n, "malformed edge line: '" + line + "'");
    double w;
    try {
      std::size_t used = 0;
      w = std::stod(wtext, &used);
      detail::require_data(used == wtext.size(), "bad weight");
    } catch (const std::exception&) {
      throw data_error("malformed edge weight: '" + line + "'");
    }
    edges.push_back({static_cast<vertex_id>(std::min(i, j)), static_cast<vertex_id>(std::max(i, j)), w});
  }
  while (std::getline(is, line))
    detail::require_data(line.find_first_not_of(" \t\r") == std::string::npos, "trailing data after edge list");

  std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  std::vector<Edge> unique;
  unique.reserve(edges.size());
  for (const auto& ed : edges) {
    if (!unique.empty() && unique.back().u == ed.u && unique.back().v == ed.v) {
      detail::require_data(unique.back().weight == ed.weight,
                           "asymmetric edge list: pair (" + std::to_string(ed.u) + "," + std::to_string(ed.v) + ") has two weights");
      continue;
    }
    unique.push_back(ed);
  }
  return Graph::from_edges(static_cast<std::size_t>(n), std::move(unique));
}

inline void save_graph(const Graph& g, const std::string& path) {
  std::ofstream os(path);
  detail::require_data(static_cast<bool>(os), "cannot open '" + path + "' for writing");
  write_graph(os, g);
  detail::require_data(static_cast<bool>(os), "write failed: '" + path + "'");
}

inline Graph load_graph(const std::string& path) {
  std::ifstream is(path);
  detail::require_data(static_cast<bool>(is), "cannot open graph file '" + path + "'");
  return read_graph(is);
}

}  // namespace gknn
