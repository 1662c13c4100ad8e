#pragma once

namespace qwlab {

inline constexpr const char* kVersionString = "0.1.0";
inline constexpr int kQwtmFormatVersion = 1;

}  // namespace qwlab
