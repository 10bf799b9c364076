#pragma once

namespace flearn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace flearn
