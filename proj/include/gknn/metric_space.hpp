#pragma once

// Point storage, Minkowski-type metrics and an exact spatial index.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gknn/errors.hpp"

namespace gknn {

/// N points of a common ambient dimension, stored row-major, with an optional
/// N x N precomputed distance matrix. A cloud may carry only the matrix.
class PointCloud {
public:
  PointCloud() = default;

  PointCloud(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    detail::require(dim_ >= 1, "point dimension must be >= 1");
    detail::require(coords_.size() % dim_ == 0, "coordinate buffer is not a multiple of the dimension");
    n_ = coords_.size() / dim_;
  }

  static PointCloud from_rows(const std::vector<std::vector<double>>& rows) {
    detail::require(!rows.empty(), "cannot infer dimension from zero rows");
    const std::size_t dim = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * dim);
    for (const auto& r : rows) {
      detail::require(r.size() == dim, "all points must have identical dimension");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return PointCloud(dim, std::move(flat));
  }

  static PointCloud from_distance_matrix(std::size_t n, std::vector<double> matrix) {
    PointCloud c;
    c.n_ = n;
    c.set_distance_matrix(std::move(matrix));
    return c;
  }

  void set_distance_matrix(std::vector<double> matrix) {
    detail::require_data(matrix.size() == n_ * n_, "distance matrix must be N x N");
    for (std::size_t i = 0; i < n_; ++i) {
      detail::require_data(matrix[i * n_ + i] == 0.0, "distance matrix diagonal must be zero");
      for (std::size_t j = 0; j < n_; ++j) {
        const double d = matrix[i * n_ + j];
        detail::require_data(std::isfinite(d) && d >= 0.0, "distance matrix entries must be finite and >= 0");
        detail::require_data(d == matrix[j * n_ + i], "distance matrix must be symmetric");
      }
    }
    matrix_ = std::move(matrix);
  }

  std::size_t size() const noexcept { return n_; }
  bool empty() const noexcept { return n_ == 0; }
  std::size_t dim() const noexcept { return dim_; }
  bool has_coordinates() const noexcept { return dim_ > 0; }
  bool has_distance_matrix() const noexcept { return matrix_.has_value(); }

  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  std::span<const double> coordinates() const noexcept { return coords_; }
  double matrix_entry(std::size_t i, std::size_t j) const { return (*matrix_)[i * n_ + j]; }

private:
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::optional<std::vector<double>> matrix_;
};

/// (sum |a_i - b_i|^p)^(q/p). q != 1 breaks the triangle inequality in
/// general; graph path sums stay well defined.
struct Minkowski {
  double p = 2.0;
  double q = 1.0;
};

/// Distances read from the cloud's distance matrix.
struct Precomputed {};

using Metric = std::variant<Minkowski, Precomputed>;

inline Metric euclidean() { return Minkowski{2.0, 1.0}; }

inline void validate(const Metric& m) {
  if (const auto* mk = std::get_if<Minkowski>(&m)) {
    detail::require(mk->p >= 1.0 && std::isfinite(mk->p), "Minkowski p must be >= 1");
    detail::require(mk->q > 0.0 && std::isfinite(mk->q), "Minkowski q must be > 0");
  }
}

// "euclidean", "minkowski:<p>:<q>" or "precomputed"
inline Metric parse_metric(const std::string& text) {
  if (text == "euclidean") return euclidean();
  if (text == "precomputed") return Precomputed{};
  if (text.rfind("minkowski:", 0) == 0) {
    const std::string rest = text.substr(10);
    const auto colon = rest.find(':');
    try {
      Minkowski m{std::stod(rest.substr(0, colon)), colon == std::string::npos ? 1.0 : std::stod(rest.substr(colon + 1))};
      validate(m);
      return m;
    } catch (const std::invalid_argument&) {
    } catch (const std::out_of_range&) {
    }
  }
  throw std::invalid_argument("bad metric '" + text + "' (expected euclidean, minkowski:<p>:<q> or precomputed)");
}

inline double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double d = a[t] - b[t];
    s += d * d;
  }
  return s;
}

inline double minkowski_distance(std::span<const double> a, std::span<const double> b, const Minkowski& m) {
  double base;
  if (m.p == 2.0) {
    base = std::sqrt(squared_euclidean(a, b));
  } else if (m.p == 1.0) {
    base = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) base += std::abs(a[t] - b[t]);
  } else {
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) s += std::pow(std::abs(a[t] - b[t]), m.p);
    base = std::pow(s, 1.0 / m.p);
  }
  return m.q == 1.0 ? base : std::pow(base, m.q);
}

inline double distance(const Metric& metric, const PointCloud& cloud, std::size_t i, std::size_t j) {
  detail::require(i < cloud.size() && j < cloud.size(), "vertex index out of range");
  if (std::holds_alternative<Precomputed>(metric)) {
    detail::require(cloud.has_distance_matrix(), "precomputed metric selected but cloud has no distance matrix");
    return cloud.matrix_entry(i, j);
  }
  detail::require(cloud.has_coordinates(), "metric needs point coordinates");
  return minkowski_distance(cloud.point(i), cloud.point(j), std::get<Minkowski>(metric));
}

struct IndexedDistance {
  vertex_id id;
  double distance;

  friend bool operator==(const IndexedDistance&, const IndexedDistance&) = default;
};

/// Exact Euclidean range/kNN index. Uses a k-d tree for dimensions up to
/// kMaxTreeDim and a linear scan above it. Holds its own copy of the points.
class SpatialIndex {
public:
  static constexpr std::size_t kMaxTreeDim = 16;
  static constexpr std::size_t kLeafSize = 12;

  explicit SpatialIndex(const PointCloud& cloud) {
    detail::require(!cloud.empty(), "cannot index an empty cloud");
    detail::require(cloud.has_coordinates(), "spatial index needs point coordinates");
    n_ = cloud.size();
    dim_ = cloud.dim();
    coords_.assign(cloud.coordinates().begin(), cloud.coordinates().end());
    perm_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) perm_[i] = static_cast<vertex_id>(i);
    if (dim_ <= kMaxTreeDim) build(0, n_);
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return dim_; }
  bool uses_tree() const noexcept { return !nodes_.empty(); }
  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }

  /// All ids with distance strictly below r, ascending by id.
  std::vector<vertex_id> range_query(std::span<const double> center, double r) const {
    detail::require(center.size() == dim_, "query dimension mismatch");
    detail::require(r > 0.0, "range radius must be > 0");
    std::vector<vertex_id> out;
    if (!uses_tree()) {
      for (std::size_t i = 0; i < n_; ++i)
        if (std::sqrt(squared_euclidean(center, point(i))) < r) out.push_back(static_cast<vertex_id>(i));
      return out;
    }
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
      const Node& nd = nodes_[stack.back()];
      const std::size_t self = stack.back();
      stack.pop_back();
      if (std::sqrt(box_distance2(self, center)) >= r) continue;
      if (nd.left == kNone) {
        for (std::size_t p = nd.begin; p < nd.end; ++p)
          if (std::sqrt(squared_euclidean(center, point(perm_[p]))) < r) out.push_back(perm_[p]);
      } else {
        stack.push_back(nd.left);
        stack.push_back(nd.right);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// The k nearest points (fewer if N < k), ascending by (distance, id).
  std::vector<IndexedDistance> knn_query(std::span<const double> center, std::size_t k) const {
    detail::require(center.size() == dim_, "query dimension mismatch");
    detail::require(k >= 1, "k must be >= 1");
    k = std::min(k, n_);
    // max-heap on (d2, id): top is the current worst candidate
    std::vector<std::pair<double, vertex_id>> best;
    best.reserve(k + 1);
    auto offer = [&](vertex_id id) {
      const std::pair<double, vertex_id> cand{squared_euclidean(center, point(id)), id};
      if (best.size() < k) {
        best.push_back(cand);
        std::push_heap(best.begin(), best.end());
      } else if (cand < best.front()) {
        std::pop_heap(best.begin(), best.end());
        best.back() = cand;
        std::push_heap(best.begin(), best.end());
      }
    };
    if (!uses_tree()) {
      for (std::size_t i = 0; i < n_; ++i) offer(static_cast<vertex_id>(i));
    } else {
      using Item = std::pair<double, std::size_t>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
      frontier.emplace(box_distance2(0, center), 0);
      while (!frontier.empty()) {
        const auto [bd, idx] = frontier.top();
        frontier.pop();
        if (best.size() == k && bd > best.front().first) break;
        const Node& nd = nodes_[idx];
        if (nd.left == kNone) {
          for (std::size_t p = nd.begin; p < nd.end; ++p) offer(perm_[p]);
        } else {
          frontier.emplace(box_distance2(nd.left, center), nd.left);
          frontier.emplace(box_distance2(nd.right, center), nd.right);
        }
      }
    }
    std::sort_heap(best.begin(), best.end());
    std::vector<IndexedDistance> out;
    out.reserve(best.size());
    for (const auto& [d2, id] : best) out.push_back({id, std::sqrt(d2)});
    return out;
  }

private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  struct Node {
    std::size_t begin, end;
    std::size_t left = kNone, right = kNone;
  };

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t idx = nodes_.size();
    nodes_.push_back({begin, end});
    lo_.resize(nodes_.size() * dim_, std::numeric_limits<double>::infinity());
    hi_.resize(nodes_.size() * dim_, -std::numeric_limits<double>::infinity());
    for (std::size_t p = begin; p < end; ++p) {
      const auto x = point(perm_[p]);
      for (std::size_t t = 0; t < dim_; ++t) {
        lo_[idx * dim_ + t] = std::min(lo_[idx * dim_ + t], x[t]);
        hi_[idx * dim_ + t] = std::max(hi_[idx * dim_ + t], x[t]);
      }
    }
    if (end - begin <= kLeafSize) return idx;
    std::size_t axis = 0;
    double widest = -1.0;
    for (std::size_t t = 0; t < dim_; ++t) {
      const double w = hi_[idx * dim_ + t] - lo_[idx * dim_ + t];
      if (w > widest) {
        widest = w;
        axis = t;
      }
    }
    if (widest <= 0.0) return idx;  // all points identical
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(begin), perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                     perm_.begin() + static_cast<std::ptrdiff_t>(end), [&](vertex_id a, vertex_id b) {
                       const double xa = coords_[a * dim_ + axis], xb = coords_[b * dim_ + axis];
                       return xa < xb || (xa == xb && a < b);
                     });
    const std::size_t l = build(begin, mid);
    const std::size_t r = build(mid, end);
    nodes_[idx].left = l;
    nodes_[idx].right = r;
    return idx;
  }

  // Lower bound of the squared distance from q to the node's bounding box.
  double box_distance2(std::size_t node, std::span<const double> q) const {
    double s = 0.0;
    for (std::size_t t = 0; t < dim_; ++t) {
      const double lo = lo_[node * dim_ + t], hi = hi_[node * dim_ + t];
      double d = 0.0;
      if (q[t] < lo) d = lo - q[t];
      else if (q[t] > hi) d = q[t] - hi;
      s += d * d;
    }
    return s;
  }

  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<vertex_id> perm_;
  std::vector<Node> nodes_;
  std::vector<double> lo_, hi_;
};

inline SpatialIndex build_spatial_index(const PointCloud& cloud) { return SpatialIndex(cloud); }

}  // namespace gknn
