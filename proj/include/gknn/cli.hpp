#pragma once

// Command-line driver. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 numerical/diagnostic abort.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "gknn/errors.hpp"
#include "gknn/experiment.hpp"
#include "gknn/geodesic_knn.hpp"
#include "gknn/graph.hpp"
#include "gknn/io.hpp"
#include "gknn/manifold.hpp"
#include "gknn/metric_space.hpp"
#include "gknn/regression.hpp"
#include "gknn/version.hpp"

namespace gknn::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kDiagnostic = 3 };

// Warn before runs whose queue bound exceeds this.
inline constexpr std::size_t kMemoryWarnBytes = std::size_t{1} << 30;

namespace detail {

inline void write_stats_json(const RunStats& s, Algorithm algo, const Graph& g, std::size_t n, std::size_t k,
                             const std::string& path) {
  json j = stats_to_json(s, true);
  j["algorithm"] = to_string(algo);
  j["num_vertices"] = g.num_vertices();
  j["num_directed_edges"] = g.num_directed_edges();
  j["n"] = n;
  j["k"] = k;
  j["pop_bound"] = algo == Algorithm::alg2   ? alg2_pop_bound(g, k)
                   : algo == Algorithm::alg1 ? alg1_pop_bound(g, n, k)
                                             : n * g.num_vertices();
  std::ofstream os(path);
  gknn::detail::require_data(static_cast<bool>(os), "cannot open '" + path + "' for writing");
  os << j.dump(2) << '\n';
}

inline void warn_memory(const Graph& g, std::size_t n, std::size_t k, std::ostream& err) {
  const auto est = memory_estimate(g, n, k);
  if (est.bytes > kMemoryWarnBytes)
    err << "warning: queue may hold up to " << est.entries << " entries (~" << (est.bytes >> 20) << " MiB)\n";
}

}  // namespace detail

/// Runs the CLI with the given arguments (argv[0] is the program name).
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Geodesic k-nearest-labeled-neighbor search and regression on neighborhood graphs", "gknn"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print library and file format versions");

  // build-graph
  auto* build = app.add_subcommand("build-graph", "Build a neighborhood graph from points");
  std::string points_path, distances_path, rule_text, weights_text = "raw", metric_text = "euclidean", out_path;
  build->add_option("--points", points_path, "Points file (CSV or GKNN binary)");
  build->add_option("--distances", distances_path, "Precomputed distance matrix CSV");
  build->add_option("--metric", metric_text, "euclidean | minkowski:<p>:<q> | precomputed");
  build->add_option("--rule", rule_text, "cutoff:<r> | knn:<k>")->required();
  build->add_option("--weights", weights_text, "raw | affine | affine:<eps>");
  build->add_option("--out", out_path, "Output graph file")->required();

  // gknn
  auto* knn = app.add_subcommand("gknn", "Geodesic k nearest labeled neighbors of every vertex");
  std::string graph_path, labels_path, algo_text = "alg2", stats_path;
  std::size_t k = 0;
  unsigned threads = 0;
  knn->add_option("--graph", graph_path, "Graph file")->required();
  knn->add_option("--labels", labels_path, "Labels CSV (vertex,y)")->required();
  knn->add_option("--k", k, "Number of labeled neighbors")->required()->check(CLI::PositiveNumber);
  knn->add_option("--algorithm", algo_text, "naive | alg1 | alg2");
  knn->add_option("--out", out_path, "Output neighbor table")->required();
  knn->add_option("--stats-json", stats_path, "Write run statistics as JSON");
  knn->add_option("--threads", threads, "Worker threads (a single search is serial)");

  // regress
  auto* regress = app.add_subcommand("regress", "Geodesic kNN regression estimates");
  std::string table_path, regress_weights = "uniform", queries_path, queries_out;
  bool baseline = false;
  std::size_t regress_k = 0;
  regress->add_option("--table", table_path, "Neighbor table from `gknn`");
  regress->add_option("--graph", graph_path, "Graph file (neighbors computed in-process)");
  regress->add_option("--labels", labels_path, "Labels CSV (vertex,y)")->required();
  regress->add_option("--k", regress_k, "Neighbors used (required with --graph; truncates --table)")->check(CLI::PositiveNumber);
  regress->add_option("--weights", regress_weights, "uniform | exp2");
  regress->add_option("--algorithm", algo_text, "naive | alg1 | alg2 (with --graph)");
  regress->add_option("--out", out_path, "Per-vertex estimates CSV");
  regress->add_option("--points", points_path, "Points of the graph vertices (for --queries)");
  regress->add_option("--queries", queries_path, "Query points for inductive estimates");
  regress->add_option("--queries-out", queries_out, "Query estimates CSV");
  regress->add_flag("--euclidean-baseline", baseline, "Also emit Euclidean kNN estimates for the queries");

  // check-distances
  auto* check = app.add_subcommand("check-distances", "Compare graph and manifold distances on a synthetic sample");
  std::string manifold_text = "circle:1", json_out;
  std::size_t samples = 2000, pairs = 10000;
  double delta = 0.1;
  std::uint64_t seed = 1;
  std::optional<double> min_fraction;
  check->add_option("--manifold", manifold_text, "circle[:R] | swissroll[:turns[:width[:scale]]] | torus[:R[:r]]");
  check->add_option("--samples", samples, "Number of sampled points")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 31));
  check->add_option("--rule", rule_text, "cutoff:<r> | knn:<k>")->required();
  check->add_option("--weights", weights_text, "raw | affine | affine:<eps>");
  check->add_option("--delta", delta, "Ratio tolerance");
  check->add_option("--pairs", pairs, "Sampled pairs")->check(CLI::PositiveNumber);
  check->add_option("--seed", seed, "RNG seed");
  check->add_option("--json", json_out, "Write the result as JSON");
  check->add_option("--min-fraction", min_fraction, "Exit 3 if the in-bounds fraction is below this");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run a rate experiment from a JSON config");
  std::string config_path, out_dir;
  experiment->add_option("--config", config_path, "Experiment config JSON")->required();
  experiment->add_option("--out", out_dir, "Report directory")->required();
  experiment->add_option("--threads", threads, "Worker threads (default: all cores)");

  // bench
  auto* bench = app.add_subcommand("bench", "Time naive, alg1 and alg2 on identical inputs");
  std::size_t labeled = 1000;
  std::string bench_manifold = "swissroll", bench_rule = "knn:4";
  bench->add_option("--graph", graph_path, "Graph file");
  bench->add_option("--labels", labels_path, "Labels CSV");
  bench->add_option("--manifold", bench_manifold, "Synthetic manifold (when no --graph)");
  bench->add_option("--samples", samples, "Synthetic sample size")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 31));
  bench->add_option("--labeled", labeled, "Synthetic labeled count")->check(CLI::PositiveNumber);
  bench->add_option("--rule", bench_rule, "Synthetic graph rule");
  bench->add_option("--k", k, "Number of labeled neighbors")->required()->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed, "RNG seed");
  bench->add_option("--out", out_path, "Timing table CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (show_version) {
      out << "gknn " << kVersion << " (graph format " << kGraphFormat << ", points format GKNN, report format "
          << kReportFormat << ")\n";
      return kOk;
    }

    if (*build) {
      const Metric metric = parse_metric(metric_text);
      const EdgeRule rule = parse_edge_rule(rule_text);
      const WeightScheme scheme = parse_weight_scheme(weights_text);
      const bool precomputed = std::holds_alternative<Precomputed>(metric);
      if (precomputed && distances_path.empty()) throw std::invalid_argument("--metric precomputed needs --distances");
      if (!precomputed && points_path.empty()) throw std::invalid_argument("--points is required unless --metric precomputed");
      if (!precomputed && !distances_path.empty())
        throw std::invalid_argument("--distances is only used with --metric precomputed");

      PointCloud cloud;
      if (!points_path.empty()) cloud = load_points(points_path);
      if (precomputed) {
        std::size_t n = 0;
        auto matrix = load_distance_matrix(distances_path, n);
        if (cloud.empty()) {
          cloud = PointCloud::from_distance_matrix(n, std::move(matrix));
        } else {
          gknn::detail::require_data(n == cloud.size(), "distance matrix size does not match the point count");
          cloud.set_distance_matrix(std::move(matrix));
        }
      }
      const Graph g = build_graph(cloud, metric, rule, scheme);
      save_graph(g, out_path);
      err << "graph: " << g.num_vertices() << " vertices, " << g.num_edges() << " edges\n";
      return kOk;
    }

    if (*knn) {
      const Algorithm algo = parse_algorithm(algo_text);
      const Graph g = load_graph(graph_path);
      const LabelSet labels = load_labels(labels_path);
      detail::warn_memory(g, labels.size(), k, err);
      const auto res = geodesic_knn(algo, g, labels, k);
      save_neighbor_table(res.table, out_path);
      if (!stats_path.empty()) detail::write_stats_json(res.stats, algo, g, labels.size(), k, stats_path);
      return kOk;
    }

    if (*regress) {
      const RegressionWeights w = parse_regression_weights(regress_weights);
      if (table_path.empty() == graph_path.empty()) throw std::invalid_argument("give exactly one of --table or --graph");
      if (!graph_path.empty() && regress_k == 0) throw std::invalid_argument("--graph needs --k");
      const Algorithm algo = parse_algorithm(algo_text);
      if (!queries_path.empty() && (points_path.empty() || queries_out.empty()))
        throw std::invalid_argument("--queries needs --points and --queries-out");
      if (baseline && (queries_path.empty() || regress_k == 0))
        throw std::invalid_argument("--euclidean-baseline needs --queries and --k");
      if (out_path.empty() && queries_out.empty()) throw std::invalid_argument("nothing to write: give --out and/or --queries-out");

      const LabelSet labels = load_labels(labels_path);
      NeighborTable table;
      if (!table_path.empty()) {
        table = load_neighbor_table(table_path);
        if (regress_k > 0) table = table.truncated(regress_k);
      } else {
        const Graph g = load_graph(graph_path);
        table = geodesic_knn(algo, g, labels, regress_k).table;
      }
      const RegressionEstimate est = regress_transductive(table, labels, w);
      if (!out_path.empty()) save_estimates(est, out_path);

      if (!queries_path.empty()) {
        const PointCloud cloud = load_points(points_path);
        const PointCloud queries = load_points(queries_path);
        gknn::detail::require_data(cloud.size() == est.size(), "--points does not match the graph's vertex count");
        const SpatialIndex index(cloud);
        std::optional<EuclideanKnnRegressor> base;
        if (baseline) base.emplace(cloud, labels, regress_k, w);
        std::ofstream os(queries_out);
        gknn::detail::require_data(static_cast<bool>(os), "cannot open '" + queries_out + "' for writing");
        os << (baseline ? "query,estimate,flag,euclidean\n" : "query,estimate,flag\n");
        for (std::size_t q = 0; q < queries.size(); ++q) {
          os << q << ',';
          try {
            os << format_double(regress_inductive(queries.point(q), index, est)) << ",ok";
          } catch (const unreachable_error&) {
            os << "nan,unreachable";
          }
          if (base) os << ',' << format_double(base->predict(queries.point(q)));
          os << '\n';
        }
      }
      return kOk;
    }

    if (*check) {
      const SyntheticManifold m = parse_manifold(manifold_text);
      const EdgeRule rule = parse_edge_rule(rule_text);
      const WeightScheme scheme = parse_weight_scheme(weights_text);
      if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("--delta must lie in (0, 1)");
      const Dataset ds = sample_dataset(m, ResponseModel{}, 1, samples - 1, seed);
      const Graph g = build_graph(ds.cloud, euclidean(), rule, scheme);
      const DistanceCheck res = check_distance_approximation(g, ds.oracle, delta, pairs, seed + 1);
      out << "fraction_in_bounds " << format_double(res.fraction_in_bounds) << " (evaluated " << res.evaluated
          << ", disconnected " << res.disconnected << ", skipped " << res.skipped << ")\n";
      if (!json_out.empty()) {
        json j{{"manifold", manifold_to_json(m)},
               {"samples", samples},
               {"graph_rule", to_string(rule)},
               {"num_edges", g.num_edges()},
               {"delta", delta},
               {"pairs", pairs},
               {"seed", seed},
               {"fraction_in_bounds", res.fraction_in_bounds},
               {"evaluated", res.evaluated},
               {"skipped", res.skipped},
               {"disconnected", res.disconnected},
               {"min_ratio", std::isfinite(res.min_ratio) ? json(res.min_ratio) : json(nullptr)},
               {"max_ratio", std::isfinite(res.max_ratio) ? json(res.max_ratio) : json(nullptr)}};
        std::ofstream os(json_out);
        gknn::detail::require_data(static_cast<bool>(os), "cannot open '" + json_out + "' for writing");
        os << j.dump(2) << '\n';
      }
      if (min_fraction && res.fraction_in_bounds < *min_fraction) {
        err << "fraction in bounds " << res.fraction_in_bounds << " is below " << *min_fraction << '\n';
        return kDiagnostic;
      }
      return kOk;
    }

    if (*experiment) {
      const ExperimentConfig cfg = load_config(config_path);
      const unsigned nthreads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
      const ExperimentReport rep = run_rate_experiment(cfg, nthreads);
      write_report(rep, out_dir);
      for (const auto& s : rep.slopes)
        out << "m=" << s.m << " slope_geodesic " << format_double(s.slope_geodesic) << " slope_euclidean "
            << format_double(s.slope_euclidean) << " (target " << format_double(rep.target_slope()) << ")\n";
      if (rep.aborted_cells > 0) {
        err << rep.aborted_cells << " experiment cells aborted; see report.json diagnostics\n";
        return kDiagnostic;
      }
      return kOk;
    }

    if (*bench) {
      if (graph_path.empty() != labels_path.empty()) throw std::invalid_argument("--graph and --labels go together");
      const bool synthetic = graph_path.empty();
      BenchmarkInput input;
      if (synthetic) {
        const SyntheticManifold m = parse_manifold(bench_manifold);
        const EdgeRule rule = parse_edge_rule(bench_rule);
        if (labeled > samples) throw std::invalid_argument("--labeled must not exceed --samples");
        input = make_manifold_benchmark(m, samples, labeled, rule, seed);
      } else {
        input = {load_graph(graph_path), load_labels(labels_path)};
      }
      detail::warn_memory(input.graph, input.labels.size(), k, err);
      const SpeedBenchmark b = run_speed_benchmark(input.graph, input.labels, k);
      write_benchmark_csv(out, b);
      if (!out_path.empty()) {
        std::ofstream os(out_path);
        gknn::detail::require_data(static_cast<bool>(os), "cannot open '" + out_path + "' for writing");
        write_benchmark_csv(os, b);
      }
      if (!b.tables_match) {
        err << "neighbor tables disagree between algorithms\n";
        return kDiagnostic;
      }
      return kOk;
    }

    out << app.help();
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const diagnostic_error& e) {
    err << "error: " << e.what() << '\n';
    return kDiagnostic;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
}

}  // namespace gknn::cli
