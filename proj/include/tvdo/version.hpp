#pragma once

namespace tvdo {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tvdo
