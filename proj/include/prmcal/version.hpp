#pragma once

namespace prmcal {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace prmcal
