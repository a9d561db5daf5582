#pragma once

namespace relvar {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace relvar
