#pragma once

// kNN response estimates: transductive (from a NeighborTable), inductive
// (routing a fresh point through its Euclidean nearest sample) and the
// supervised Euclidean kNN baseline.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gknn/errors.hpp"
#include "gknn/geodesic_knn.hpp"
#include "gknn/metric_space.hpp"

namespace gknn {

enum class RegressionWeights {
  uniform,
  exp2,  // i-th nearest (1-indexed) weighted by 2^-i, normalized over present neighbors
};

inline RegressionWeights parse_regression_weights(const std::string& s) {
  if (s == "uniform") return RegressionWeights::uniform;
  if (s == "exp2") return RegressionWeights::exp2;
  throw std::invalid_argument("unknown regression weights '" + s + "' (expected uniform or exp2)");
}

inline const char* to_string(RegressionWeights w) { return w == RegressionWeights::uniform ? "uniform" : "exp2"; }

/// Weighted mean of responses given in neighbor order. Empty input has no mean.
inline std::optional<double> neighbor_average(std::span<const double> ordered, RegressionWeights weights) {
  if (ordered.empty()) return std::nullopt;
  double num = 0.0, den = 0.0;
  double w = 1.0;
  for (double y : ordered) {
    if (weights == RegressionWeights::exp2) w *= 0.5;
    num += w * y;
    den += w;
  }
  return num / den;
}

/// Per-vertex estimate; nullopt where no labeled vertex was reachable.
using RegressionEstimate = std::vector<std::optional<double>>;

inline RegressionEstimate regress_transductive(const NeighborTable& table, const LabelSet& labels,
                                               RegressionWeights weights) {
  RegressionEstimate out(table.num_vertices());
  std::vector<double> ys;
  for (std::size_t v = 0; v < table.num_vertices(); ++v) {
    ys.clear();
    for (const auto& nb : table[v]) ys.push_back(labels.response(nb.seed));
    out[v] = neighbor_average(ys, weights);
  }
  return out;
}

/// Estimate at `query` = estimate at its Euclidean nearest indexed point.
inline double regress_inductive(std::span<const double> query, const SpatialIndex& index,
                                const RegressionEstimate& estimates) {
  detail::require(estimates.size() == index.size(), "estimates do not cover the indexed points");
  const auto nn = index.knn_query(query, 1);
  const auto& est = estimates[nn.front().id];
  if (!est) throw unreachable_error("nearest sample " + std::to_string(nn.front().id) + " has no labeled vertex in reach");
  return *est;
}

/// Supervised baseline: kNN regression in ambient space over the labeled
/// points only. Ties in distance go to the smaller vertex id.
class EuclideanKnnRegressor {
public:
  EuclideanKnnRegressor(const PointCloud& cloud, const LabelSet& labels, std::size_t k, RegressionWeights weights)
      : k_(k), weights_(weights), index_(labeled_subset(cloud, labels)) {
    detail::require(k >= 1, "k must be >= 1");
    responses_.assign(labels.responses().begin(), labels.responses().end());
  }

  double predict(std::span<const double> query) const {
    const auto nn = index_.knn_query(query, k_);
    std::vector<double> ys;
    ys.reserve(nn.size());
    for (const auto& c : nn) ys.push_back(responses_[c.id]);
    return *neighbor_average(ys, weights_);
  }

private:
  static PointCloud labeled_subset(const PointCloud& cloud, const LabelSet& labels) {
    detail::require(!labels.empty(), "label set is empty");
    detail::require(cloud.has_coordinates(), "Euclidean baseline needs point coordinates");
    std::vector<double> flat;
    flat.reserve(labels.size() * cloud.dim());
    for (vertex_id id : labels.ids()) {
      detail::require_data(id < cloud.size(), "labeled vertex outside the point cloud");
      const auto p = cloud.point(id);
      flat.insert(flat.end(), p.begin(), p.end());
    }
    return PointCloud(cloud.dim(), std::move(flat));
  }

  std::size_t k_;
  RegressionWeights weights_;
  SpatialIndex index_;
  std::vector<double> responses_;
};

inline std::vector<double> euclidean_knn_regress(const PointCloud& cloud, const LabelSet& labels, std::size_t k,
                                                 RegressionWeights weights, const PointCloud& queries) {
  const EuclideanKnnRegressor reg(cloud, labels, k, weights);
  std::vector<double> out;
  out.reserve(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) out.push_back(reg.predict(queries.point(q)));
  return out;
}

}  // namespace gknn
