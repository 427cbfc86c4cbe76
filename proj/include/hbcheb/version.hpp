#pragma once

namespace hbcheb {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hbcheb
