#pragma once

namespace polymom {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace polymom
