#pragma once

namespace bblab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bblab
