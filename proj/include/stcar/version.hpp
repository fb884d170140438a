#pragma once

namespace stcar {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace stcar
