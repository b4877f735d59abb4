#pragma once

namespace latq {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace latq
