#pragma once

namespace gmis {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gmis
