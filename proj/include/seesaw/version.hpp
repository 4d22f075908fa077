#pragma once

namespace seesaw {
inline constexpr const char* kVersion = "0.1.0";
}
