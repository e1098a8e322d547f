#pragma once

namespace spraymet {

inline constexpr const char* kToolName = "spraymet";
inline constexpr const char* kVersion = "0.1.0";

} // namespace spraymet
