#pragma once

namespace aoisim {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "aoisim";

}  // namespace aoisim
