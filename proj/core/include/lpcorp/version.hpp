#pragma once

namespace lpcorp {

inline constexpr const char* kVersion = "0.1.0";

// Bumped when the on-disk model layouts change; loaders reject mismatches.
inline constexpr int kTfidfFileVersion = 1;
inline constexpr int kCorrectionFileVersion = 1;

}  // namespace lpcorp
