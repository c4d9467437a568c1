#pragma once

namespace hda {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hda
