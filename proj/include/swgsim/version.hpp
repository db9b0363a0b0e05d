#pragma once

namespace swg {

inline constexpr const char* kToolVersion = "swgsim 0.1.0";

}  // namespace swg
