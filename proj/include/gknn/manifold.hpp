#pragma once

// Synthetic manifolds with exact geodesic distances, Lipschitz response
// models, dataset sampling and the graph-vs-manifold distance check.

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gknn/errors.hpp"
#include "gknn/geodesic_knn.hpp"
#include "gknn/graph.hpp"
#include "gknn/metric_space.hpp"

namespace gknn {

/// Circle of the given radius in R^2. Intrinsic coordinate: angle.
struct Circle {
  double radius = 1.0;
};

/// Archimedean roll (t cos t, h, t sin t) * scale, t in [1.5pi, 1.5pi + 2pi*turns],
/// h in [0, width]. Intrinsic coordinates: (arc length along the spiral, h),
/// both multiplied by scale. The unrolled strip is a rectangle, so geodesics
/// are straight lines in intrinsic coordinates.
struct SwissRoll {
  double turns = 1.5;
  double width = 21.0;
  double scale = 1.0;
};

/// Product of two circles embedded isometrically in R^4 as
/// (R cos u, R sin u, r cos v, r sin v); the induced metric is flat, so
/// geodesics follow from wrapped angle differences.
struct FlatTorus {
  double major = 1.0;
  double minor = 0.5;
};

using SyntheticManifold = std::variant<Circle, SwissRoll, FlatTorus>;

/// Intrinsic coordinates of a sample; circles use only the first slot.
using ManifoldCoords = std::array<double, 2>;

namespace detail {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kRollStart = 1.5 * std::numbers::pi;

inline double wrapped_angle(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

// Arc length of the spiral r = t from 0 to t.
inline double spiral_arc(double t) { return 0.5 * (t * std::sqrt(1.0 + t * t) + std::asinh(t)); }

inline double roll_end(const SwissRoll& s) { return kRollStart + kTwoPi * s.turns; }
inline double roll_length(const SwissRoll& s) { return spiral_arc(roll_end(s)) - spiral_arc(kRollStart); }

// Spiral parameter t whose unscaled arc length from the start equals `arc`.
inline double spiral_param(const SwissRoll& s, double arc) {
  const double target = arc + spiral_arc(kRollStart);
  double lo = kRollStart, hi = roll_end(s);
  double t = lo + (hi - lo) * arc / roll_length(s);
  for (int it = 0; it < 60; ++it) {
    const double f = spiral_arc(t) - target;
    if (f > 0) hi = t;
    else lo = t;
    double next = t - f / std::sqrt(1.0 + t * t);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-15 * t) return next;
    t = next;
  }
  return t;
}

}  // namespace detail

inline void validate(const SyntheticManifold& m) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Circle>) {
          detail::require(s.radius > 0.0 && std::isfinite(s.radius), "circle radius must be > 0");
        } else if constexpr (std::is_same_v<T, SwissRoll>) {
          detail::require(s.turns > 0.0 && s.width > 0.0 && s.scale > 0.0, "swiss roll turns, width and scale must be > 0");
        } else {
          detail::require(s.major > 0.0 && s.minor > 0.0, "torus radii must be > 0");
        }
      },
      m);
}

/// "circle[:radius]", "swissroll[:turns[:width[:scale]]]" or "torus[:major[:minor]]".
inline SyntheticManifold parse_manifold(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string::npos ? std::string::npos : colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  std::vector<double> v;
  try {
    for (std::size_t i = 1; i < parts.size(); ++i) {
      std::size_t used = 0;
      v.push_back(std::stod(parts[i], &used));
      if (used != parts[i].size()) throw std::invalid_argument("trailing characters");
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("bad manifold parameters in '" + text + "'");
  }
  SyntheticManifold m;
  if (parts[0] == "circle" && v.size() <= 1) {
    m = Circle{v.empty() ? 1.0 : v[0]};
  } else if (parts[0] == "swissroll" && v.size() <= 3) {
    SwissRoll s;
    if (v.size() > 0) s.turns = v[0];
    if (v.size() > 1) s.width = v[1];
    if (v.size() > 2) s.scale = v[2];
    m = s;
  } else if (parts[0] == "torus" && v.size() <= 2) {
    FlatTorus t;
    if (v.size() > 0) t.major = v[0];
    if (v.size() > 1) t.minor = v[1];
    m = t;
  } else {
    throw std::invalid_argument("bad manifold '" + text + "'");
  }
  validate(m);
  return m;
}

inline std::size_t intrinsic_dim(const SyntheticManifold& m) { return std::holds_alternative<Circle>(m) ? 1 : 2; }

inline std::size_t ambient_dim(const SyntheticManifold& m) {
  if (std::holds_alternative<Circle>(m)) return 2;
  if (std::holds_alternative<SwissRoll>(m)) return 3;
  return 4;
}

inline std::string manifold_name(const SyntheticManifold& m) {
  if (std::holds_alternative<Circle>(m)) return "circle";
  if (std::holds_alternative<SwissRoll>(m)) return "swissroll";
  return "torus";
}

/// Draws intrinsic coordinates from the uniform (area) measure.
template <typename Rng>
ManifoldCoords sample_coords(const SyntheticManifold& m, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (std::holds_alternative<Circle>(m)) return {detail::kTwoPi * unit(rng), 0.0};
  if (const auto* s = std::get_if<SwissRoll>(&m)) {
    const double a = unit(rng) * detail::roll_length(*s);
    const double h = unit(rng) * s->width;
    return {a * s->scale, h * s->scale};
  }
  const double u = detail::kTwoPi * unit(rng);
  const double v = detail::kTwoPi * unit(rng);
  return {u, v};
}

inline void embed(const SyntheticManifold& m, const ManifoldCoords& c, std::span<double> out) {
  if (const auto* ci = std::get_if<Circle>(&m)) {
    out[0] = ci->radius * std::cos(c[0]);
    out[1] = ci->radius * std::sin(c[0]);
  } else if (const auto* s = std::get_if<SwissRoll>(&m)) {
    const double t = detail::spiral_param(*s, c[0] / s->scale);
    out[0] = s->scale * t * std::cos(t);
    out[1] = c[1];
    out[2] = s->scale * t * std::sin(t);
  } else {
    const auto& tor = std::get<FlatTorus>(m);
    out[0] = tor.major * std::cos(c[0]);
    out[1] = tor.major * std::sin(c[0]);
    out[2] = tor.minor * std::cos(c[1]);
    out[3] = tor.minor * std::sin(c[1]);
  }
}

inline double geodesic_distance(const SyntheticManifold& m, const ManifoldCoords& a, const ManifoldCoords& b) {
  if (const auto* ci = std::get_if<Circle>(&m)) return ci->radius * detail::wrapped_angle(a[0], b[0]);
  if (std::holds_alternative<SwissRoll>(m)) return std::hypot(a[0] - b[0], a[1] - b[1]);
  const auto& tor = std::get<FlatTorus>(m);
  return std::hypot(tor.major * detail::wrapped_angle(a[0], b[0]), tor.minor * detail::wrapped_angle(a[1], b[1]));
}

inline double diameter(const SyntheticManifold& m) {
  if (const auto* ci = std::get_if<Circle>(&m)) return std::numbers::pi * ci->radius;
  if (const auto* s = std::get_if<SwissRoll>(&m)) return s->scale * std::hypot(detail::roll_length(*s), s->width);
  const auto& tor = std::get<FlatTorus>(m);
  return std::numbers::pi * std::hypot(tor.major, tor.minor);
}

/// f = L * g where g is 1-Lipschitz under the geodesic distance:
/// circle R sin(theta), swiss roll the arc-length coordinate, torus R sin(u).
struct ResponseModel {
  double lipschitz = 1.0;
  double sigma = 0.0;
};

inline double response_value(const SyntheticManifold& m, const ResponseModel& r, const ManifoldCoords& c) {
  if (const auto* ci = std::get_if<Circle>(&m)) return r.lipschitz * ci->radius * std::sin(c[0]);
  if (std::holds_alternative<SwissRoll>(m)) return r.lipschitz * c[0];
  return r.lipschitz * std::get<FlatTorus>(m).major * std::sin(c[0]);
}

/// Exact manifold distances between the samples of a dataset.
class GeodesicOracle {
public:
  GeodesicOracle(SyntheticManifold m, std::vector<ManifoldCoords> coords) : manifold_(m), coords_(std::move(coords)) {}

  std::size_t size() const noexcept { return coords_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return geodesic_distance(manifold_, coords_[i], coords_[j]); }
  const SyntheticManifold& manifold() const noexcept { return manifold_; }
  std::span<const ManifoldCoords> coords() const noexcept { return coords_; }

private:
  SyntheticManifold manifold_;
  std::vector<ManifoldCoords> coords_;
};

struct Dataset {
  PointCloud cloud;           // n + m points; the first n are labeled
  LabelSet labels;            // noisy responses of the first n points
  std::vector<double> truth;  // noiseless f at every point
  GeodesicOracle oracle;
};

template <typename Rng>
std::vector<ManifoldCoords> sample_coords(const SyntheticManifold& m, std::size_t count, Rng& rng) {
  std::vector<ManifoldCoords> out(count);
  for (auto& c : out) c = sample_coords(m, rng);
  return out;
}

inline PointCloud embed_all(const SyntheticManifold& m, std::span<const ManifoldCoords> coords) {
  const std::size_t dim = ambient_dim(m);
  std::vector<double> flat(coords.size() * dim);
  for (std::size_t i = 0; i < coords.size(); ++i) embed(m, coords[i], std::span<double>(flat.data() + i * dim, dim));
  return PointCloud(dim, std::move(flat));
}

/// Labels y_i = f(x_i) + N(0, sigma^2) for the first n of the given samples.
template <typename Rng>
LabelSet make_labels(const SyntheticManifold& m, const ResponseModel& r, std::span<const ManifoldCoords> coords,
                     std::size_t n, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::pair<vertex_id, double>> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double y = response_value(m, r, coords[i]);
    if (r.sigma > 0.0) y += r.sigma * noise(rng);
    rows.emplace_back(static_cast<vertex_id>(i), y);
  }
  return LabelSet(std::move(rows));
}

/// n + m i.i.d. samples from the uniform measure; the first n are labeled.
inline Dataset sample_dataset(const SyntheticManifold& m, const ResponseModel& r, std::size_t n, std::size_t extra,
                              std::uint64_t seed) {
  validate(m);
  detail::require(n >= 1, "need at least one labeled point");
  detail::require(r.sigma >= 0.0 && r.lipschitz >= 0.0, "sigma and L must be >= 0");
  std::mt19937_64 rng(seed);
  auto coords = sample_coords(m, n + extra, rng);
  auto labels = make_labels(m, r, coords, n, rng);
  std::vector<double> truth;
  truth.reserve(coords.size());
  for (const auto& c : coords) truth.push_back(response_value(m, r, c));
  PointCloud cloud = embed_all(m, coords);
  return {std::move(cloud), std::move(labels), std::move(truth), GeodesicOracle(m, std::move(coords))};
}

struct DistanceCheck {
  double fraction_in_bounds = 0.0;
  std::size_t evaluated = 0;     // pairs with d_M above the skip threshold
  std::size_t skipped = 0;       // pairs with d_M < 1e-9
  std::size_t disconnected = 0;  // counted as out of bounds
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

/// Fraction of uniformly sampled pairs whose d_G / d_M lies in [1-delta, 1+delta].
inline DistanceCheck check_distance_approximation(const Graph& g, const GeodesicOracle& oracle, double delta,
                                                  std::size_t pair_sample, std::uint64_t seed) {
  detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  detail::require(pair_sample >= 1, "pair sample must be >= 1");
  detail::require(g.num_vertices() == oracle.size() && g.num_vertices() >= 2,
                  "graph and oracle must cover the same >= 2 points");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, g.num_vertices() - 1);
  std::vector<std::pair<vertex_id, vertex_id>> pairs;
  pairs.reserve(pair_sample);
  while (pairs.size() < pair_sample) {
    const auto i = pick(rng), j = pick(rng);
    if (i != j) pairs.emplace_back(static_cast<vertex_id>(i), static_cast<vertex_id>(j));
  }
  std::sort(pairs.begin(), pairs.end());

  DistanceCheck out;
  out.min_ratio = std::numeric_limits<double>::infinity();
  std::size_t inside = 0;
  std::vector<double> dist;
  RunStats scratch;
  vertex_id current = static_cast<vertex_id>(-1);
  for (const auto& [i, j] : pairs) {
    if (i != current) {
      dijkstra(g, i, dist, scratch, [](vertex_id, double) {});
      current = i;
    }
    const double dm = oracle(i, j);
    if (dm < 1e-9) {
      ++out.skipped;
      continue;
    }
    ++out.evaluated;
    if (!std::isfinite(dist[j])) {
      ++out.disconnected;
      out.max_ratio = std::numeric_limits<double>::infinity();
      continue;
    }
    const double ratio = dist[j] / dm;
    out.min_ratio = std::min(out.min_ratio, ratio);
    out.max_ratio = std::max(out.max_ratio, ratio);
    if (ratio >= 1.0 - delta && ratio <= 1.0 + delta) ++inside;
  }
  out.fraction_in_bounds = out.evaluated ? static_cast<double>(inside) / static_cast<double>(out.evaluated) : 0.0;
  if (out.evaluated == out.disconnected) out.min_ratio = out.max_ratio;
  return out;
}

}  // namespace gknn
