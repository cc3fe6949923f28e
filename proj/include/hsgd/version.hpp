#pragma once

namespace hsgd {
inline constexpr const char* kVersion = "0.1.0";
}
