#pragma once

namespace flowseq {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace flowseq
