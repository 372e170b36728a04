#pragma once

namespace rfsim {

inline constexpr const char* kVersion = "0.1.0";

} // namespace rfsim
