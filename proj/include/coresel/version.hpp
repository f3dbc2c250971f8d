#pragma once

namespace coresel {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace coresel
