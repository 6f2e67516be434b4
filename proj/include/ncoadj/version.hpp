#pragma once

namespace ncoadj {
inline constexpr const char* kVersion = "0.1.0";
}
