#pragma once

namespace vilab {

inline constexpr const char* kVersion = "0.1.0";

} // namespace vilab
