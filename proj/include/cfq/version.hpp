#pragma once

namespace cfq {

inline constexpr const char* version = "1.0.0";

}  // namespace cfq
