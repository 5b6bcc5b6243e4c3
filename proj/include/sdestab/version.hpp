#pragma once

namespace sdestab {
inline constexpr const char* kVersion = "0.1.0";
}
