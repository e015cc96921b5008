#pragma once

namespace pmshoot {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pmshoot
