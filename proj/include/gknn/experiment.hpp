#pragma once

// Experiment drivers on synthetic manifolds: the MSE-vs-n rate experiment
// (geodesic kNN against the Euclidean kNN baseline) and the speed benchmark
// comparing the three geodesic kNN routes.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "gknn/errors.hpp"
#include "gknn/geodesic_knn.hpp"
#include "gknn/graph.hpp"
#include "gknn/io.hpp"
#include "gknn/manifold.hpp"
#include "gknn/regression.hpp"

namespace gknn {

using json = nlohmann::ordered_json;

inline constexpr const char* kRngName = "mt19937_64";
inline constexpr const char* kReportFormat = "gknn-report v1";

struct ExperimentConfig {
  SyntheticManifold manifold = SwissRoll{};
  std::vector<std::size_t> n_values;
  std::vector<std::size_t> m_values;
  std::optional<std::size_t> k;  // nullopt: ceil(n^(2/(2+d)))
  EdgeRule graph_rule = SymmetricKnnRule{10};
  WeightScheme weight_scheme = RawDistance{};
  double sigma = 0.1;
  double lipschitz = 1.0;
  std::size_t repetitions = 1;
  std::uint64_t seed = 0;

  std::size_t test_points = 1000;
  RegressionWeights regression_weights = RegressionWeights::uniform;
  Algorithm algorithm = Algorithm::alg2;
  double delta = 0.1;
  std::size_t distance_pairs = 0;  // pairs per (n, m) graph of repetition 0; 0 disables
};

/// k = ceil(n^(2/(2+d))).
inline std::size_t rate_optimal_k(std::size_t n, std::size_t d) {
  const double k = std::ceil(std::pow(static_cast<double>(n), 2.0 / (2.0 + static_cast<double>(d))) - 1e-12);
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

inline std::size_t effective_k(const ExperimentConfig& c, std::size_t n) {
  return c.k ? *c.k : rate_optimal_k(n, intrinsic_dim(c.manifold));
}

inline void validate(const ExperimentConfig& c) {
  validate(c.manifold);
  detail::require(!c.n_values.empty() && !c.m_values.empty(), "n_values and m_values must be nonempty");
  for (auto n : c.n_values) detail::require(n >= 1, "every n must be >= 1");
  detail::require(!c.k || *c.k >= 1, "k must be >= 1");
  detail::require(c.repetitions >= 1, "repetitions must be >= 1");
  detail::require(c.test_points >= 1, "test_points must be >= 1");
  detail::require(c.sigma >= 0.0 && c.lipschitz >= 0.0, "sigma and L must be >= 0");
  detail::require(c.delta > 0.0 && c.delta < 1.0, "delta must lie in (0, 1)");
  if (const auto* r = std::get_if<SymmetricKnnRule>(&c.graph_rule)) {
    const std::size_t smallest = *std::min_element(c.n_values.begin(), c.n_values.end()) +
                                 *std::min_element(c.m_values.begin(), c.m_values.end());
    detail::require(r->k < smallest, "graph k_G must be smaller than the smallest n + m");
  }
}

// ---------------------------------------------------------------------------
// JSON config
// ---------------------------------------------------------------------------

inline json manifold_to_json(const SyntheticManifold& m) {
  if (const auto* c = std::get_if<Circle>(&m)) return {{"type", "circle"}, {"radius", c->radius}};
  if (const auto* s = std::get_if<SwissRoll>(&m))
    return {{"type", "swissroll"}, {"turns", s->turns}, {"width", s->width}, {"scale", s->scale}};
  const auto& t = std::get<FlatTorus>(m);
  return {{"type", "torus"}, {"major", t.major}, {"minor", t.minor}};
}

inline SyntheticManifold manifold_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "circle") return Circle{j.value("radius", 1.0)};
  if (type == "swissroll") {
    SwissRoll s;
    s.turns = j.value("turns", s.turns);
    s.width = j.value("width", s.width);
    s.scale = j.value("scale", s.scale);
    return s;
  }
  if (type == "torus") return FlatTorus{j.value("major", 1.0), j.value("minor", 0.5)};
  throw std::invalid_argument("unknown manifold type '" + type + "'");
}

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["manifold"] = manifold_to_json(c.manifold);
  j["n_values"] = c.n_values;
  j["m_values"] = c.m_values;
  if (c.k) j["k"] = *c.k;
  else j["k"] = "auto";
  j["graph_rule"] = to_string(c.graph_rule);
  j["weight_scheme"] = to_string(c.weight_scheme);
  j["sigma"] = c.sigma;
  j["L"] = c.lipschitz;
  j["repetitions"] = c.repetitions;
  j["seed"] = c.seed;
  j["test_points"] = c.test_points;
  j["regression_weights"] = to_string(c.regression_weights);
  j["algorithm"] = to_string(c.algorithm);
  j["delta"] = c.delta;
  j["distance_pairs"] = c.distance_pairs;
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.manifold = manifold_from_json(j.at("manifold"));
    c.n_values = j.at("n_values").get<std::vector<std::size_t>>();
    c.m_values = j.at("m_values").get<std::vector<std::size_t>>();
    const json& k = j.at("k");
    if (k.is_string()) {
      detail::require(k.get<std::string>() == "auto", "k must be an integer or \"auto\"");
    } else {
      c.k = k.get<std::size_t>();
    }
    c.graph_rule = parse_edge_rule(j.at("graph_rule").get<std::string>());
    c.weight_scheme = parse_weight_scheme(j.value("weight_scheme", std::string("raw")));
    c.sigma = j.at("sigma").get<double>();
    c.lipschitz = j.at("L").get<double>();
    c.repetitions = j.at("repetitions").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.test_points = j.value("test_points", c.test_points);
    c.regression_weights = parse_regression_weights(j.value("regression_weights", std::string("uniform")));
    c.algorithm = parse_algorithm(j.value("algorithm", std::string("alg2")));
    c.delta = j.value("delta", c.delta);
    c.distance_pairs = j.value("distance_pairs", c.distance_pairs);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad experiment config: ") + e.what());
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  detail::require_data(static_cast<bool>(is), "cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw data_error("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Rate experiment
// ---------------------------------------------------------------------------

struct CellResult {
  std::size_t n = 0, m = 0, rep = 0, k = 0;
  std::size_t num_edges = 0;
  double mse_geodesic = std::numeric_limits<double>::quiet_NaN();
  double mse_euclidean = std::numeric_limits<double>::quiet_NaN();
  double unreachable_fraction = 0.0;
  bool aborted = false;
  std::string diagnostic;
  RunStats stats;
  std::size_t pop_bound = 0;
  std::optional<DistanceCheck> distance;
  double wall_time = 0.0;
};

struct SummaryRow {
  std::size_t n = 0, m = 0, k = 0;
  std::size_t reps_used = 0;
  double mean_mse_geodesic = std::numeric_limits<double>::quiet_NaN();
  double mean_mse_euclidean = std::numeric_limits<double>::quiet_NaN();
};

struct SlopeRow {
  std::size_t m = 0;
  double slope_geodesic = std::numeric_limits<double>::quiet_NaN();
  double slope_euclidean = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<CellResult> cells;  // ordered by (n index, rep, m index)
  std::vector<SummaryRow> summary;
  std::vector<SlopeRow> slopes;
  std::size_t aborted_cells = 0;
  std::size_t pop_bound_violations = 0;
  std::size_t monotone_violations = 0;

  double target_slope() const { return -2.0 / (2.0 + static_cast<double>(intrinsic_dim(config.manifold))); }
};

/// Ordinary least squares slope of y on x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  detail::require(x.size() == y.size() && x.size() >= 2, "slope fit needs at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

namespace detail {

inline std::mt19937_64 cell_rng(std::uint64_t seed, std::size_t n, std::size_t rep, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(rep), stream};
  return std::mt19937_64(seq);
}

inline PointCloud prefix(const PointCloud& cloud, std::size_t count) {
  const auto coords = cloud.coordinates();
  return PointCloud(cloud.dim(), std::vector<double>(coords.begin(), coords.begin() + static_cast<std::ptrdiff_t>(count * cloud.dim())));
}

// All m values of one (n, rep) share the labeled sample, the test sample and
// nested prefixes of a single unlabeled pool.
inline std::vector<CellResult> run_replicate(const ExperimentConfig& cfg, std::size_t n, std::size_t rep) {
  const SyntheticManifold& man = cfg.manifold;
  const ResponseModel response{cfg.lipschitz, cfg.sigma};
  const std::size_t m_max = *std::max_element(cfg.m_values.begin(), cfg.m_values.end());
  const std::size_t k = effective_k(cfg, n);

  auto rng = cell_rng(cfg.seed, n, rep, 0);
  const auto coords = sample_coords(man, n + m_max, rng);
  const LabelSet labels = make_labels(man, response, coords, n, rng);
  auto test_rng = cell_rng(cfg.seed, n, rep, 1);
  const auto test_coords = sample_coords(man, cfg.test_points, test_rng);
  const PointCloud test_cloud = embed_all(man, test_coords);
  std::vector<double> test_truth;
  test_truth.reserve(test_coords.size());
  for (const auto& c : test_coords) test_truth.push_back(response_value(man, response, c));

  const PointCloud all = embed_all(man, coords);

  double mse_euclidean = 0.0;
  {
    const EuclideanKnnRegressor baseline(all, labels, k, cfg.regression_weights);
    for (std::size_t t = 0; t < test_cloud.size(); ++t) {
      const double e = baseline.predict(test_cloud.point(t)) - test_truth[t];
      mse_euclidean += e * e;
    }
    mse_euclidean /= static_cast<double>(test_cloud.size());
  }

  std::vector<CellResult> out;
  for (std::size_t m : cfg.m_values) {
    const auto t0 = Clock::now();
    CellResult cell;
    cell.n = n;
    cell.m = m;
    cell.rep = rep;
    cell.k = k;
    cell.mse_euclidean = mse_euclidean;
    const PointCloud cloud = prefix(all, n + m);
    const Graph g = build_graph(cloud, euclidean(), cfg.graph_rule, cfg.weight_scheme);
    cell.num_edges = g.num_edges();
    auto result = geodesic_knn(cfg.algorithm, g, labels, k);
    cell.stats = result.stats;
    cell.stats.wall_time = 0.0;
    cell.pop_bound = cfg.algorithm == Algorithm::alg2 ? alg2_pop_bound(g, k)
                     : cfg.algorithm == Algorithm::alg1 ? alg1_pop_bound(g, labels.size(), k)
                                                        : labels.size() * g.num_vertices();
    const RegressionEstimate est = regress_transductive(result.table, labels, cfg.regression_weights);
    const SpatialIndex index(cloud);
    double sse = 0.0;
    std::size_t unreachable = 0;
    for (std::size_t t = 0; t < test_cloud.size(); ++t) {
      try {
        const double e = regress_inductive(test_cloud.point(t), index, est) - test_truth[t];
        sse += e * e;
      } catch (const unreachable_error&) {
        ++unreachable;
      }
    }
    cell.unreachable_fraction = static_cast<double>(unreachable) / static_cast<double>(test_cloud.size());
    if (cell.unreachable_fraction > 0.1) {
      cell.aborted = true;
      cell.diagnostic = std::to_string(unreachable) + " of " + std::to_string(test_cloud.size()) +
                        " test points route to vertices with no labeled vertex in reach";
    } else {
      cell.mse_geodesic = sse / static_cast<double>(test_cloud.size() - unreachable);
    }
    if (cfg.distance_pairs > 0 && rep == 0 && cloud.size() >= 2) {
      GeodesicOracle oracle(man, std::vector<ManifoldCoords>(coords.begin(), coords.begin() + static_cast<std::ptrdiff_t>(n + m)));
      cell.distance = check_distance_approximation(g, oracle, cfg.delta, cfg.distance_pairs, cfg.seed ^ (n * 1000003 + m));
    }
    cell.wall_time = seconds_since(t0);
    out.push_back(std::move(cell));
  }
  return out;
}

}  // namespace detail

/// Runs every (n, rep) replicate (in parallel when threads > 1) and
/// aggregates. The report does not depend on the thread count.
inline ExperimentReport run_rate_experiment(const ExperimentConfig& cfg, unsigned threads = 1) {
  validate(cfg);
  const std::size_t tasks = cfg.n_values.size() * cfg.repetitions;
  std::vector<std::vector<CellResult>> slots(tasks);
  std::vector<std::exception_ptr> errors(tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < tasks;) {
      try {
        slots[t] = detail::run_replicate(cfg, cfg.n_values[t / cfg.repetitions], t % cfg.repetitions);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentReport rep;
  rep.config = cfg;
  for (auto& s : slots)
    for (auto& c : s) {
      rep.aborted_cells += c.aborted;
      rep.pop_bound_violations += c.stats.pops > c.pop_bound;
      rep.monotone_violations += c.stats.monotone_violations;
      rep.cells.push_back(std::move(c));
    }

  for (std::size_t m : cfg.m_values) {
    std::vector<double> log_n, log_geo, log_n_e, log_euc;
    for (std::size_t n : cfg.n_values) {
      SummaryRow row;
      row.n = n;
      row.m = m;
      row.k = effective_k(cfg, n);
      double geo = 0.0, euc = 0.0;
      for (const auto& c : rep.cells) {
        if (c.n != n || c.m != m || c.aborted) continue;
        geo += c.mse_geodesic;
        euc += c.mse_euclidean;
        ++row.reps_used;
      }
      if (row.reps_used > 0) {
        row.mean_mse_geodesic = geo / static_cast<double>(row.reps_used);
        row.mean_mse_euclidean = euc / static_cast<double>(row.reps_used);
        if (row.mean_mse_geodesic > 0) {
          log_n.push_back(std::log(static_cast<double>(n)));
          log_geo.push_back(std::log(row.mean_mse_geodesic));
        }
        if (row.mean_mse_euclidean > 0) {
          log_n_e.push_back(std::log(static_cast<double>(n)));
          log_euc.push_back(std::log(row.mean_mse_euclidean));
        }
      }
      rep.summary.push_back(row);
    }
    SlopeRow s;
    s.m = m;
    if (log_n.size() >= 2) s.slope_geodesic = ols_slope(log_n, log_geo);
    if (log_n_e.size() >= 2) s.slope_euclidean = ols_slope(log_n_e, log_euc);
    rep.slopes.push_back(s);
  }
  return rep;
}

inline json stats_to_json(const RunStats& s, bool with_time) {
  json j{{"pops", s.pops},
         {"inserts", s.inserts},
         {"decreases", s.decreases},
         {"stale_pops", s.stale_pops},
         {"local_pops", s.local_pops},
         {"peak_queue_len", s.peak_queue_len},
         {"monotone_violations", s.monotone_violations},
         {"revisits", s.revisits}};
  if (with_time) j["wall_time"] = s.wall_time;
  return j;
}

namespace detail {

inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace detail

/// Deterministic JSON view of a report (no wall-clock fields).
inline json report_to_json(const ExperimentReport& r) {
  json j;
  j["format"] = kReportFormat;
  j["rng"] = kRngName;
  j["config"] = config_to_json(r.config);
  j["intrinsic_dim"] = intrinsic_dim(r.config.manifold);
  j["target_slope"] = r.target_slope();
  json cells = json::array();
  for (const auto& c : r.cells) {
    json cj{{"n", c.n},
            {"m", c.m},
            {"rep", c.rep},
            {"k", c.k},
            {"num_edges", c.num_edges},
            {"mse_geodesic", detail::number_or_null(c.mse_geodesic)},
            {"mse_euclidean", detail::number_or_null(c.mse_euclidean)},
            {"unreachable_fraction", c.unreachable_fraction},
            {"aborted", c.aborted},
            {"run_stats", stats_to_json(c.stats, false)},
            {"pop_bound", c.pop_bound}};
    if (c.aborted) cj["diagnostic"] = c.diagnostic;
    if (c.distance) {
      cj["distance_check"] = {{"fraction_in_bounds", c.distance->fraction_in_bounds},
                              {"evaluated", c.distance->evaluated},
                              {"skipped", c.distance->skipped},
                              {"disconnected", c.distance->disconnected},
                              {"min_ratio", detail::number_or_null(c.distance->min_ratio)},
                              {"max_ratio", detail::number_or_null(c.distance->max_ratio)}};
    }
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  json summary = json::array();
  for (const auto& s : r.summary)
    summary.push_back({{"n", s.n},
                       {"m", s.m},
                       {"k", s.k},
                       {"reps_used", s.reps_used},
                       {"mean_mse_geodesic", detail::number_or_null(s.mean_mse_geodesic)},
                       {"mean_mse_euclidean", detail::number_or_null(s.mean_mse_euclidean)}});
  j["summary"] = std::move(summary);
  json slopes = json::array();
  for (const auto& s : r.slopes)
    slopes.push_back({{"m", s.m},
                      {"slope_geodesic", detail::number_or_null(s.slope_geodesic)},
                      {"slope_euclidean", detail::number_or_null(s.slope_euclidean)}});
  j["slopes"] = std::move(slopes);
  j["aborted_cells"] = r.aborted_cells;
  j["pop_bound_violations"] = r.pop_bound_violations;
  j["monotone_violations"] = r.monotone_violations;
  return j;
}

/// Writes report.json, cells.csv and summary.csv (all deterministic) plus
/// timings.csv (wall-clock, varies between runs) into `dir`.
inline void write_report(const ExperimentReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "report.json");
    detail::require_data(static_cast<bool>(os), "cannot write report into '" + dir.string() + "'");
    os << report_to_json(r).dump(2) << '\n';
  }
  auto num = [](double x) { return std::isfinite(x) ? format_double(x) : std::string("nan"); };
  {
    std::ofstream os(dir / "cells.csv");
    os << "n,m,rep,k,num_edges,mse_geodesic,mse_euclidean,unreachable_fraction,aborted,pops,pop_bound\n";
    for (const auto& c : r.cells)
      os << c.n << ',' << c.m << ',' << c.rep << ',' << c.k << ',' << c.num_edges << ',' << num(c.mse_geodesic) << ','
         << num(c.mse_euclidean) << ',' << num(c.unreachable_fraction) << ',' << (c.aborted ? 1 : 0) << ','
         << c.stats.pops << ',' << c.pop_bound << '\n';
  }
  {
    std::ofstream os(dir / "summary.csv");
    os << "n,m,k,reps_used,mean_mse_geodesic,mean_mse_euclidean\n";
    for (const auto& s : r.summary)
      os << s.n << ',' << s.m << ',' << s.k << ',' << s.reps_used << ',' << num(s.mean_mse_geodesic) << ','
         << num(s.mean_mse_euclidean) << '\n';
  }
  {
    std::ofstream os(dir / "timings.csv");
    os << "n,m,rep,wall_time_s\n";
    for (const auto& c : r.cells) os << c.n << ',' << c.m << ',' << c.rep << ',' << num(c.wall_time) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Speed benchmark
// ---------------------------------------------------------------------------

struct BenchmarkRow {
  Algorithm algorithm;
  RunStats stats;
  double speedup_vs_naive = std::numeric_limits<double>::quiet_NaN();
  std::size_t pop_bound = 0;
};

struct SpeedBenchmark {
  std::size_t num_vertices = 0, num_directed_edges = 0, n = 0, k = 0;
  std::vector<BenchmarkRow> rows;
  bool tables_match = true;
};

/// Runs naive, alg1 and alg2 on identical inputs and compares their tables.
inline SpeedBenchmark run_speed_benchmark(const Graph& g, const LabelSet& labels, std::size_t k) {
  SpeedBenchmark b;
  b.num_vertices = g.num_vertices();
  b.num_directed_edges = g.num_directed_edges();
  b.n = labels.size();
  b.k = k;
  std::optional<NeighborTable> reference;
  for (Algorithm a : {Algorithm::naive, Algorithm::alg1, Algorithm::alg2}) {
    auto res = geodesic_knn(a, g, labels, k);
    BenchmarkRow row{a, res.stats};
    row.pop_bound = a == Algorithm::naive  ? labels.size() * g.num_vertices()
                    : a == Algorithm::alg1 ? alg1_pop_bound(g, labels.size(), k)
                                           : alg2_pop_bound(g, k);
    if (!reference) reference = std::move(res.table);
    else b.tables_match = b.tables_match && tables_equivalent(*reference, res.table);
    b.rows.push_back(row);
  }
  for (auto& row : b.rows) row.speedup_vs_naive = b.rows.front().stats.wall_time / row.stats.wall_time;
  return b;
}

inline void write_benchmark_csv(std::ostream& os, const SpeedBenchmark& b) {
  os << "algorithm,num_vertices,num_directed_edges,n,k,wall_time_s,speedup_vs_naive,pops,pop_bound,inserts,decreases,"
        "stale_pops,peak_queue_len,tables_match\n";
  for (const auto& r : b.rows)
    os << to_string(r.algorithm) << ',' << b.num_vertices << ',' << b.num_directed_edges << ',' << b.n << ',' << b.k
       << ',' << format_double(r.stats.wall_time) << ',' << format_double(r.speedup_vs_naive) << ',' << r.stats.pops
       << ',' << r.pop_bound << ',' << r.stats.inserts << ',' << r.stats.decreases << ',' << r.stats.stale_pops << ','
       << r.stats.peak_queue_len << ',' << (b.tables_match ? 1 : 0) << '\n';
}

/// Benchmark input: `samples` points of a manifold, graph by `rule`, the
/// first n samples labeled (samples are i.i.d., so the first n are a uniform
/// random subset).
struct BenchmarkInput {
  Graph graph;
  LabelSet labels;
};

inline BenchmarkInput make_manifold_benchmark(const SyntheticManifold& m, std::size_t samples, std::size_t n,
                                              const EdgeRule& rule, std::uint64_t seed) {
  detail::require(n >= 1 && n <= samples, "need 1 <= n <= samples");
  Dataset ds = sample_dataset(m, ResponseModel{1.0, 0.0}, n, samples - n, seed);
  return {build_graph(ds.cloud, euclidean(), rule), std::move(ds.labels)};
}

}  // namespace gknn
