#pragma once

namespace stablebox {
inline constexpr const char* kVersion = "0.1.0";
}
