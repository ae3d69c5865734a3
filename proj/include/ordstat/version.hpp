#pragma once

namespace ordstat {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ordstat
