#pragma once

// k nearest labeled vertices of every vertex under shortest-path distance.
//
// Three routes to the same NeighborTable:
//   geodesic_knn_alg1     one priority queue of (seed, vertex) pairs, running
//                         all labeled Dijkstra searches at once and pruning
//                         every vertex once it holds k results;
//   geodesic_knn_alg2     a per-vertex queue of seeds plus a global queue of
//                         per-vertex minima, so a vertex stops costing pops
//                         as soon as it is full;
//   naive_multi_dijkstra  one full Dijkstra per labeled vertex, keeping the k
//                         smallest entries per vertex. Used as the oracle.
//
// All queues order by (distance, seed), so the k results chosen at a tie on
// the boundary are the same for every route.

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gknn/errors.hpp"
#include "gknn/graph.hpp"
#include "gknn/indexed_heap.hpp"

namespace gknn {

/// Labeled vertices (sorted, unique) with their observed responses.
class LabelSet {
public:
  LabelSet() = default;

  explicit LabelSet(std::vector<std::pair<vertex_id, double>> labeled) {
    std::sort(labeled.begin(), labeled.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      detail::require_data(i == 0 || labeled[i].first != labeled[i - 1].first,
                           "duplicate labeled vertex " + std::to_string(labeled[i].first));
      detail::require_data(std::isfinite(labeled[i].second), "label responses must be finite");
      ids_.push_back(labeled[i].first);
      responses_.push_back(labeled[i].second);
    }
  }

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  std::span<const vertex_id> ids() const noexcept { return ids_; }
  std::span<const double> responses() const noexcept { return responses_; }

  std::ptrdiff_t position(vertex_id v) const {
    const auto it = std::lower_bound(ids_.begin(), ids_.end(), v);
    return (it != ids_.end() && *it == v) ? it - ids_.begin() : -1;
  }
  bool contains(vertex_id v) const { return position(v) >= 0; }

  double response(vertex_id v) const {
    const auto p = position(v);
    detail::require_data(p >= 0, "vertex " + std::to_string(v) + " is not labeled");
    return responses_[static_cast<std::size_t>(p)];
  }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

private:
  std::vector<vertex_id> ids_;
  std::vector<double> responses_;
};

struct Neighbor {
  vertex_id seed;
  double distance;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

inline bool canonical_less(const Neighbor& a, const Neighbor& b) {
  return a.distance != b.distance ? a.distance < b.distance : a.seed < b.seed;
}

/// Per-vertex lists of up to k (seed, distance) pairs, ascending by
/// (distance, seed).
class NeighborTable {
public:
  NeighborTable() = default;

  explicit NeighborTable(const std::vector<std::vector<Neighbor>>& lists) {
    offsets_.reserve(lists.size() + 1);
    for (const auto& l : lists) {
      entries_.insert(entries_.end(), l.begin(), l.end());
      offsets_.push_back(entries_.size());
    }
  }

  std::size_t num_vertices() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const Neighbor> operator[](std::size_t v) const {
    return {entries_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t total_entries() const noexcept { return entries_.size(); }

  void canonicalize() {
    for (std::size_t v = 0; v < num_vertices(); ++v)
      std::sort(entries_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
                entries_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]), canonical_less);
  }

  /// Lists truncated to their first k entries.
  NeighborTable truncated(std::size_t k) const {
    std::vector<std::vector<Neighbor>> lists(num_vertices());
    for (std::size_t v = 0; v < num_vertices(); ++v) {
      const auto l = (*this)[v];
      lists[v].assign(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(std::min(k, l.size())));
    }
    return NeighborTable(lists);
  }

  friend bool operator==(const NeighborTable&, const NeighborTable&) = default;

private:
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> entries_;
};

/// Same seeds in the same order everywhere, distances within abs_tol.
inline bool tables_equivalent(const NeighborTable& a, const NeighborTable& b, double abs_tol = 1e-9) {
  if (a.num_vertices() != b.num_vertices()) return false;
  for (std::size_t v = 0; v < a.num_vertices(); ++v) {
    const auto la = a[v], lb = b[v];
    if (la.size() != lb.size()) return false;
    for (std::size_t i = 0; i < la.size(); ++i)
      if (la[i].seed != lb[i].seed || std::abs(la[i].distance - lb[i].distance) > abs_tol) return false;
  }
  return true;
}

/// Operation counters of one run. `pops` counts logical pop-minimum events on
/// the queue the pop bounds refer to (the global queue for alg2); lazily
/// superseded heap entries are counted in `stale_pops` instead.
struct RunStats {
  std::size_t pops = 0;
  std::size_t inserts = 0;
  std::size_t decreases = 0;
  std::size_t stale_pops = 0;
  std::size_t local_pops = 0;  // alg2: pops from the per-vertex queues
  std::size_t peak_queue_len = 0;
  std::size_t monotone_violations = 0;
  std::size_t revisits = 0;
  double wall_time = 0.0;
};

struct GeodesicKnnResult {
  NeighborTable table;
  RunStats stats;
};

namespace detail {

inline void check_knn_inputs(const Graph& g, const LabelSet& labels, std::size_t k) {
  require(k >= 1, "k must be >= 1");
  require(!labels.empty(), "label set is empty");
  for (vertex_id s : labels.ids())
    require_data(s < g.num_vertices(), "labeled vertex " + std::to_string(s) + " is outside the graph");
  require_data(!g.has_negative_weight(), "negative edge weight encountered");
}

// Tentative distance and visited flag of one (seed, vertex) pair.
struct PairState {
  double dist;
  bool visited;
};

class PairStates {
public:
  PairStates(std::size_t num_vertices, std::size_t expected) : n_(num_vertices) { map_.reserve(expected); }

  PairState* find(vertex_id seed, vertex_id v) {
    const auto it = map_.find(key(seed, v));
    return it == map_.end() ? nullptr : &it->second;
  }
  PairState& insert(vertex_id seed, vertex_id v, double dist) {
    return map_.emplace(key(seed, v), PairState{dist, false}).first->second;
  }

private:
  std::uint64_t key(vertex_id seed, vertex_id v) const { return std::uint64_t{seed} * n_ + v; }
  std::size_t n_;
  std::unordered_map<std::uint64_t, PairState> map_;
};

struct QueueKey {
  double dist;
  vertex_id seed;

  friend bool operator<(const QueueKey& a, const QueueKey& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.seed < b.seed;
  }
};

class MonotoneCheck {
public:
  void observe(double dist, RunStats& stats) {
    if (dist < last_) ++stats.monotone_violations;
    assert(dist >= last_ && "popped priorities must be non-decreasing");
    last_ = dist;
  }

private:
  double last_ = -std::numeric_limits<double>::infinity();
};

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline NeighborTable finish(std::vector<std::vector<Neighbor>>& lists) {
  for (auto& l : lists) std::sort(l.begin(), l.end(), canonical_less);
  return NeighborTable(lists);
}

}  // namespace detail

/// Multi-source search over (seed, vertex) pairs with a shared priority queue.
/// A vertex that already holds k results is neither expanded nor fed.
inline GeodesicKnnResult geodesic_knn_alg1(const Graph& g, const LabelSet& labels, std::size_t k) {
  detail::check_knn_inputs(g, labels, k);
  const auto t0 = detail::Clock::now();
  const std::size_t n_vertices = g.num_vertices();
  RunStats stats;
  std::vector<std::vector<Neighbor>> knn(n_vertices);
  detail::PairStates states(n_vertices, labels.size() * 4);

  struct Entry {
    double dist;
    vertex_id seed;
    vertex_id v;
    bool operator>(const Entry& o) const {
      if (dist != o.dist) return dist > o.dist;
      if (seed != o.seed) return seed > o.seed;
      return v > o.v;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::size_t live = 0;

  for (vertex_id s : labels.ids()) {
    states.insert(s, s, 0.0);
    queue.push({0.0, s, s});
    ++stats.inserts;
    ++live;
  }
  stats.peak_queue_len = live;

  detail::MonotoneCheck monotone;
  while (!queue.empty()) {
    const Entry top = queue.top();
    queue.pop();
    detail::PairState* st = states.find(top.seed, top.v);
    if (top.dist > st->dist) {
      ++stats.stale_pops;
      continue;
    }
    if (st->visited) {
      ++stats.revisits;
      continue;
    }
    st->visited = true;
    ++stats.pops;
    --live;
    monotone.observe(top.dist, stats);

    if (knn[top.v].size() >= k) continue;
    knn[top.v].push_back({top.seed, top.dist});
    const auto nbrs = g.neighbors(top.v);
    const auto wts = g.weights(top.v);
    for (std::size_t t = 0; t < nbrs.size(); ++t) {
      const vertex_id v = nbrs[t];
      if (knn[v].size() >= k) continue;
      const double nd = top.dist + wts[t];
      detail::PairState* vs = states.find(top.seed, v);
      if (vs == nullptr) {
        states.insert(top.seed, v, nd);
        ++stats.inserts;
        stats.peak_queue_len = std::max(stats.peak_queue_len, ++live);
      } else if (vs->visited || !(nd < vs->dist)) {
        continue;
      } else {
        vs->dist = nd;
        ++stats.decreases;
      }
      queue.push({nd, top.seed, v});
    }
  }
  GeodesicKnnResult out{detail::finish(knn), stats};
  out.stats.wall_time = detail::seconds_since(t0);
  return out;
}

/// Per-vertex seed queues Q_v feeding a global queue keyed by each Q_v's
/// minimum. A vertex leaves the global queue for good once it holds k
/// results, so the global queue sees at most k pops per vertex.
inline GeodesicKnnResult geodesic_knn_alg2(const Graph& g, const LabelSet& labels, std::size_t k) {
  detail::check_knn_inputs(g, labels, k);
  const auto t0 = detail::Clock::now();
  const std::size_t n_vertices = g.num_vertices();
  RunStats stats;
  std::vector<std::vector<Neighbor>> knn(n_vertices);
  detail::PairStates states(n_vertices, labels.size() * 4);

  using Local = std::pair<double, vertex_id>;  // (dist, seed), min-heap via greater
  std::vector<std::vector<Local>> local(n_vertices);
  auto local_push = [&](vertex_id v, double d, vertex_id seed) {
    local[v].emplace_back(d, seed);
    std::push_heap(local[v].begin(), local[v].end(), std::greater<>());
  };
  auto local_pop = [&](vertex_id v) {
    std::pop_heap(local[v].begin(), local[v].end(), std::greater<>());
    local[v].pop_back();
  };
  // Drops superseded or already visited entries from the top of Q_v.
  auto clean_top = [&](vertex_id v) {
    while (!local[v].empty()) {
      const auto [d, seed] = local[v].front();
      const detail::PairState* st = states.find(seed, v);
      if (!st->visited && d == st->dist) return;
      local_pop(v);
      ++stats.stale_pops;
    }
  };

  IndexedMinHeap<detail::QueueKey> global(n_vertices);
  std::size_t live = 0;
  for (vertex_id s : labels.ids()) {
    states.insert(s, s, 0.0);
    local_push(s, 0.0, s);
    global.push(s, {0.0, s});
    ++stats.inserts;
    ++live;
  }
  stats.peak_queue_len = live;

  detail::MonotoneCheck monotone;
  while (!global.empty()) {
    const auto [v0_index, gkey] = global.pop();
    const auto v0 = static_cast<vertex_id>(v0_index);
    ++stats.pops;
    monotone.observe(gkey.dist, stats);

    clean_top(v0);
    assert(!local[v0].empty());
    const auto [dist, seed] = local[v0].front();
    local_pop(v0);
    ++stats.local_pops;
    assert(dist == gkey.dist && seed == gkey.seed);
    detail::PairState* st = states.find(seed, v0);
    if (st->visited) ++stats.revisits;
    st->visited = true;
    --live;
    knn[v0].push_back({seed, dist});

    if (knn[v0].size() < k) {
      clean_top(v0);
      if (!local[v0].empty()) {
        global.push(v0, {local[v0].front().first, local[v0].front().second});
        ++stats.inserts;
      }
    } else {
      std::vector<Local>().swap(local[v0]);  // Q_v0 is disabled
    }
    const auto nbrs = g.neighbors(v0);
    const auto wts = g.weights(v0);
    for (std::size_t t = 0; t < nbrs.size(); ++t) {
      const vertex_id v = nbrs[t];
      if (knn[v].size() >= k) continue;
      const double nd = dist + wts[t];
      detail::PairState* vs = states.find(seed, v);
      if (vs == nullptr) {
        states.insert(seed, v, nd);
        stats.peak_queue_len = std::max(stats.peak_queue_len, ++live);
      } else if (vs->visited || !(nd < vs->dist)) {
        continue;
      } else {
        vs->dist = nd;
      }
      local_push(v, nd, seed);
      switch (global.decrease_or_insert(v, {nd, seed})) {
        case IndexedMinHeap<detail::QueueKey>::Update::inserted: ++stats.inserts; break;
        case IndexedMinHeap<detail::QueueKey>::Update::decreased: ++stats.decreases; break;
        case IndexedMinHeap<detail::QueueKey>::Update::unchanged: break;
      }
    }
  }
  GeodesicKnnResult out{detail::finish(knn), stats};
  out.stats.wall_time = detail::seconds_since(t0);
  return out;
}

/// Single-source Dijkstra from `source`; unreachable vertices get +inf.
/// `visit(v, d)` is called once per settled vertex in pop order.
template <typename Visit>
void dijkstra(const Graph& g, vertex_id source, std::vector<double>& dist, RunStats& stats, Visit&& visit) {
  const double inf = std::numeric_limits<double>::infinity();
  dist.assign(g.num_vertices(), inf);
  std::vector<bool> settled(g.num_vertices(), false);
  using Item = std::pair<double, vertex_id>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  ++stats.inserts;
  while (!queue.empty()) {
    stats.peak_queue_len = std::max(stats.peak_queue_len, queue.size());
    const auto [d, u] = queue.top();
    queue.pop();
    if (settled[u] || d > dist[u]) {
      ++stats.stale_pops;
      continue;
    }
    settled[u] = true;
    ++stats.pops;
    visit(u, d);
    const auto nbrs = g.neighbors(u);
    const auto wts = g.weights(u);
    for (std::size_t t = 0; t < nbrs.size(); ++t) {
      const vertex_id v = nbrs[t];
      const double nd = d + wts[t];
      if (settled[v] || !(nd < dist[v])) continue;
      if (dist[v] == inf) ++stats.inserts;
      else ++stats.decreases;
      dist[v] = nd;
      queue.emplace(nd, v);
    }
  }
}

/// One Dijkstra per labeled vertex; each vertex keeps the k smallest
/// (distance, seed) entries across all runs.
inline GeodesicKnnResult naive_multi_dijkstra(const Graph& g, const LabelSet& labels, std::size_t k) {
  detail::check_knn_inputs(g, labels, k);
  const auto t0 = detail::Clock::now();
  RunStats stats;
  std::vector<std::vector<Neighbor>> knn(g.num_vertices());
  std::vector<double> dist;
  for (vertex_id s : labels.ids()) {
    dijkstra(g, s, dist, stats, [&](vertex_id v, double d) {
      auto& l = knn[v];
      const Neighbor cand{s, d};
      if (l.size() == k) {
        if (!canonical_less(cand, l.back())) return;
        l.pop_back();
      }
      l.insert(std::upper_bound(l.begin(), l.end(), cand, canonical_less), cand);
    });
  }
  GeodesicKnnResult out{detail::finish(knn), stats};
  out.stats.wall_time = detail::seconds_since(t0);
  return out;
}

enum class Algorithm { naive, alg1, alg2 };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::naive: return "naive";
    case Algorithm::alg1: return "alg1";
    case Algorithm::alg2: return "alg2";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "naive") return Algorithm::naive;
  if (s == "alg1") return Algorithm::alg1;
  if (s == "alg2") return Algorithm::alg2;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected naive, alg1 or alg2)");
}

inline GeodesicKnnResult geodesic_knn(Algorithm algo, const Graph& g, const LabelSet& labels, std::size_t k) {
  switch (algo) {
    case Algorithm::naive: return naive_multi_dijkstra(g, labels, k);
    case Algorithm::alg1: return geodesic_knn_alg1(g, labels, k);
    case Algorithm::alg2: return geodesic_knn_alg2(g, labels, k);
  }
  throw std::invalid_argument("unknown algorithm");
}

// Pop-count bounds: alg1 pops <= min(n|V|, n + k|E_dir|); alg2 pops <= k|V|.
inline std::size_t alg1_pop_bound(const Graph& g, std::size_t n, std::size_t k) {
  return std::min(n * g.num_vertices(), n + k * g.num_directed_edges());
}
inline std::size_t alg2_pop_bound(const Graph& g, std::size_t k) { return k * g.num_vertices(); }

struct MemoryEstimate {
  std::size_t entries;
  std::size_t bytes;
};

/// Queue-size bound min(n|V|, k|E_dir|) in entries and bytes.
inline MemoryEstimate memory_estimate(std::size_t num_vertices, std::size_t num_directed_edges, std::size_t n,
                                      std::size_t k) {
  constexpr std::size_t kEntryBytes = sizeof(double) + 2 * sizeof(vertex_id);
  const std::size_t entries = std::min(n * num_vertices, k * num_directed_edges);
  return {entries, entries * kEntryBytes};
}

inline MemoryEstimate memory_estimate(const Graph& g, std::size_t n, std::size_t k) {
  return memory_estimate(g.num_vertices(), g.num_directed_edges(), n, k);
}

// ---------------------------------------------------------------------------
// NeighborTable text format, one line per vertex:
//   <v>: <seed>:<dist> <seed>:<dist> ...     (12 significant digits)
// ---------------------------------------------------------------------------

inline void write_neighbor_table(std::ostream& os, const NeighborTable& t) {
  char buf[64];
  for (std::size_t v = 0; v < t.num_vertices(); ++v) {
    os << v << ':';
    for (const auto& nb : t[v]) {
      std::snprintf(buf, sizeof buf, "%.12g", nb.distance);
      os << ' ' << nb.seed << ':' << buf;
    }
    os << '\n';
  }
}

inline NeighborTable read_neighbor_table(std::istream& is) {
  std::vector<std::vector<Neighbor>> lists;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    detail::require_data(!head.empty() && head.back() == ':', "malformed neighbor line: '" + line + "'");
    std::size_t v = 0;
    try {
      v = std::stoul(head.substr(0, head.size() - 1));
    } catch (const std::exception&) {
      throw data_error("malformed vertex id in neighbor line: '" + line + "'");
    }
    detail::require_data(v == lists.size(), "neighbor table lines must be consecutive from 0");
    std::vector<Neighbor> l;
    std::string tok;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      detail::require_data(colon != std::string::npos, "malformed neighbor entry '" + tok + "'");
      try {
        l.push_back({static_cast<vertex_id>(std::stoul(tok.substr(0, colon))), std::stod(tok.substr(colon + 1))});
      } catch (const std::exception&) {
        throw data_error("malformed neighbor entry '" + tok + "'");
      }
    }
    lists.push_back(std::move(l));
  }
  return NeighborTable(lists);
}

inline void save_neighbor_table(const NeighborTable& t, const std::string& path) {
  std::ofstream os(path);
  detail::require_data(static_cast<bool>(os), "cannot open '" + path + "' for writing");
  write_neighbor_table(os, t);
}

inline NeighborTable load_neighbor_table(const std::string& path) {
  std::ifstream is(path);
  detail::require_data(static_cast<bool>(is), "cannot open neighbor table '" + path + "'");
  return read_neighbor_table(is);
}

}  // namespace gknn
