#pragma once

#define SIB_VERSION_MAJOR 1
#define SIB_VERSION_MINOR 0
#define SIB_VERSION_PATCH 0

namespace sib {
inline constexpr const char *version = "1.0.0";
}
