#pragma once

namespace dualsr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dualsr
