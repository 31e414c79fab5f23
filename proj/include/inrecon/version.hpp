#pragma once

namespace inrecon {

inline constexpr const char *kVersion = "0.1.0";

}  // namespace inrecon
