#pragma once

namespace ivprof {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ivprof
