#pragma once

namespace lesionsynth {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kManifestSchemaVersion = 1;

}  // namespace lesionsynth
