#pragma once

namespace insider {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace insider
