#pragma once

namespace atomsca {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace atomsca
