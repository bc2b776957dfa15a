#pragma once

#include <cstdint>

#include "lesionsynth/volume.hpp"

namespace lesionsynth::phantom {

inline constexpr int kBackground = 0;
inline constexpr int kCsf = 1;
inline constexpr int kGreyMatter = 2;
inline constexpr int kWhiteMatter = 3;
inline constexpr int kDeepGrey = 4;
inline constexpr int kLesion = 5;
inline constexpr int kNumClasses = 6;

struct Options {
    Dims dims{32, 32, 32};
    Vec3 spacing{1.0, 1.0, 1.0};
    int lesions = 6;
    std::uint64_t seed = 0;
};

/// Ellipsoidal brain-like parcellation (background, CSF shell and
/// ventricles, cortex, white matter, deep grey nuclei) with random
/// ellipsoidal lesions confined to white matter, plus a noisy image with a
/// distinct mean per class.
struct Phantom {
    LabelVolume parcellation;  // K = kNumClasses, lesion class unused
    LesionMask lesions;
    ScalarVolume image;
};

Phantom make(const Options& opts = {});

}  // namespace lesionsynth::phantom
