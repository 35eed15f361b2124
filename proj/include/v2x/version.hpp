#pragma once

namespace v2x {

inline constexpr const char* kToolName = "v2xcir";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace v2x
