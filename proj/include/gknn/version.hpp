#pragma once

namespace gknn {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kGraphFormat = "gknn-graph v1";

}  // namespace gknn
