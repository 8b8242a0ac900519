#pragma once

namespace vg3d {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vg3d
