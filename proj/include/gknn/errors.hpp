#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gknn {

using vertex_id = std::uint32_t;

// Malformed or inconsistent input data (files, label sets, graphs).
class data_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Query routed to a vertex that has no estimate (no labeled vertex reachable).
class unreachable_error : public data_error {
public:
  using data_error::data_error;
};

// A numerical or statistical diagnostic forced an abort.
class diagnostic_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

inline void require_data(bool cond, const std::string& what) {
  if (!cond) throw data_error(what);
}

}  // namespace detail
}  // namespace gknn
