#pragma once

namespace dch {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kRngName = "splitmix64";

} // namespace dch
