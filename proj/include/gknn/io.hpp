#pragma once

// File formats for points, distance matrices, labels and estimates.
//
//   points CSV       one row per point, comma-separated floats; an optional
//                    non-numeric header row is skipped
//   points binary    "GKNN", u32 N, u32 D, N*D little-endian f64 row-major
//   distances CSV    square N x N matrix
//   labels CSV       header "vertex,y", then one row per labeled vertex
//   estimates CSV    header "vertex,estimate,flag"; flag is "ok" or
//                    "unreachable" (estimate column then reads "nan")

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gknn/errors.hpp"
#include "gknn/geodesic_knn.hpp"
#include "gknn/metric_space.hpp"
#include "gknn/regression.hpp"

namespace gknn {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return {buf.data(), res.ptr};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool blank(std::string_view s) { return trim(s).empty(); }

// Rows of numbers; a first row that does not parse is treated as a header.
inline std::vector<std::vector<double>> read_numeric_csv(std::istream& is, const std::string& what) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (blank(line)) continue;
    std::vector<double> row;
    bool ok = true;
    for (auto field : split_csv(line)) {
      double v;
      if (!parse_double(field, v)) {
        ok = false;
        break;
      }
      row.push_back(v);
    }
    if (!ok) {
      require_data(rows.empty() && lineno == 1, what + ": non-numeric value on line " + std::to_string(lineno));
      continue;
    }
    require_data(rows.empty() || row.size() == rows.front().size(),
                 what + ": inconsistent column count on line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream is(path, mode);
  require_data(static_cast<bool>(is), "cannot open '" + path + "'");
  return is;
}

inline std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode);
  require_data(static_cast<bool>(os), "cannot open '" + path + "' for writing");
  return os;
}

}  // namespace detail

inline PointCloud read_points_csv(std::istream& is) {
  auto rows = detail::read_numeric_csv(is, "points CSV");
  detail::require_data(!rows.empty(), "points CSV has no rows");
  for (const auto& r : rows)
    for (double x : r) detail::require_data(std::isfinite(x), "points CSV contains a non-finite coordinate");
  return PointCloud::from_rows(rows);
}

inline void write_points_csv(std::ostream& os, const PointCloud& cloud) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    for (std::size_t t = 0; t < p.size(); ++t) os << (t ? "," : "") << format_double(p[t]);
    os << '\n';
  }
}

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
  os.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get_le(std::istream& is) {
  T value;
  is.read(reinterpret_cast<char*>(&value), sizeof value);
  require_data(static_cast<bool>(is), "binary points file truncated");
  return value;
}

}  // namespace detail

inline constexpr char kPointsMagic[4] = {'G', 'K', 'N', 'N'};

inline void write_points_binary(std::ostream& os, const PointCloud& cloud) {
  os.write(kPointsMagic, 4);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cloud.size()));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cloud.dim()));
  for (double x : cloud.coordinates()) detail::put_le<double>(os, x);
}

inline PointCloud read_points_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  detail::require_data(is && std::memcmp(magic, kPointsMagic, 4) == 0, "binary points file lacks GKNN magic");
  const auto n = detail::get_le<std::uint32_t>(is);
  const auto d = detail::get_le<std::uint32_t>(is);
  detail::require_data(d >= 1, "binary points file has dimension 0");
  std::vector<double> flat(std::size_t{n} * d);
  for (auto& x : flat) x = detail::get_le<double>(is);
  return PointCloud(d, std::move(flat));
}

/// Binary if the file starts with the GKNN magic, CSV otherwise.
inline PointCloud load_points(const std::string& path) {
  auto is = detail::open_in(path, std::ios::in | std::ios::binary);
  char magic[4] = {};
  is.read(magic, 4);
  const bool binary = is.gcount() == 4 && std::memcmp(magic, kPointsMagic, 4) == 0;
  is.clear();
  is.seekg(0);
  return binary ? read_points_binary(is) : read_points_csv(is);
}

inline void save_points_binary(const PointCloud& cloud, const std::string& path) {
  auto os = detail::open_out(path, std::ios::out | std::ios::binary);
  write_points_binary(os, cloud);
}

inline void save_points_csv(const PointCloud& cloud, const std::string& path) {
  auto os = detail::open_out(path);
  write_points_csv(os, cloud);
}

inline std::vector<double> read_distance_matrix_csv(std::istream& is, std::size_t& n) {
  const auto rows = detail::read_numeric_csv(is, "distance matrix CSV");
  n = rows.size();
  std::vector<double> flat;
  flat.reserve(n * n);
  for (const auto& r : rows) {
    detail::require_data(r.size() == n, "distance matrix CSV is not square");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return flat;
}

inline std::vector<double> load_distance_matrix(const std::string& path, std::size_t& n) {
  auto is = detail::open_in(path);
  return read_distance_matrix_csv(is, n);
}

inline LabelSet read_labels_csv(std::istream& is) {
  std::string line;
  detail::require_data(static_cast<bool>(std::getline(is, line)), "labels CSV is empty");
  detail::require_data(detail::trim(line) == "vertex,y", "labels CSV must start with header 'vertex,y'");
  std::vector<std::pair<vertex_id, double>> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    const auto fields = detail::split_csv(line);
    double id, y;
    detail::require_data(fields.size() == 2 && detail::parse_double(fields[0], id) && detail::parse_double(fields[1], y),
                         "labels CSV: malformed line " + std::to_string(lineno));
    detail::require_data(id >= 0 && id == std::floor(id) && id < 4294967295.0,
                         "labels CSV: bad vertex id on line " + std::to_string(lineno));
    rows.emplace_back(static_cast<vertex_id>(id), y);
  }
  return LabelSet(std::move(rows));
}

inline void write_labels_csv(std::ostream& os, const LabelSet& labels) {
  os << "vertex,y\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    os << labels.ids()[i] << ',' << format_double(labels.responses()[i]) << '\n';
}

inline LabelSet load_labels(const std::string& path) {
  auto is = detail::open_in(path);
  return read_labels_csv(is);
}

inline void save_labels(const LabelSet& labels, const std::string& path) {
  auto os = detail::open_out(path);
  write_labels_csv(os, labels);
}

inline void write_estimates_csv(std::ostream& os, const RegressionEstimate& est) {
  os << "vertex,estimate,flag\n";
  for (std::size_t v = 0; v < est.size(); ++v) {
    if (est[v]) os << v << ',' << format_double(*est[v]) << ",ok\n";
    else os << v << ",nan,unreachable\n";
  }
}

inline void save_estimates(const RegressionEstimate& est, const std::string& path) {
  auto os = detail::open_out(path);
  write_estimates_csv(os, est);
}

}  // namespace gknn
