#pragma once

namespace fxrl {

inline constexpr const char* kVersion = "0.1.0";

}
