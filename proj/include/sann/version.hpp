#pragma once

namespace sann {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sann
