#pragma once

namespace crcpanel {

inline constexpr const char* kVersion = "crcpanel 0.1.0";

}  // namespace crcpanel
