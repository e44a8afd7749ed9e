#pragma once

namespace ringtrap {

inline constexpr const char* version = "0.1.0";

}
