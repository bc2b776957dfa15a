#pragma once

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "lesionsynth/spatial.hpp"
#include "lesionsynth/volume.hpp"

namespace lesionsynth::infer {

inline constexpr Dims kDefaultPatch{128, 128, 96};

/// Channel 0 is the image, channel 1 the prior mask. Both x-fastest.
struct PatchInput {
    Dims dims{};
    std::vector<double> image;
    std::vector<double> prior;

    std::size_t size() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }
};

/// Maps a two-channel patch to per-voxel lesion probabilities of the same
/// shape. Implementations must be deterministic and safe to call
/// concurrently.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual Dims patch_shape() const = 0;
    virtual std::vector<double> predict(const PatchInput& patch) const = 0;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

/// Reference predictors: "constant:c", "copy-prior", "threshold:t"
/// (channel 0 >= t). Throws ConfigError for anything else.
PredictorPtr make_predictor(std::string_view spec, Dims patch = kDefaultPatch);

/// Averages the base predictor over all 8 axis-flip combinations.
PredictorPtr mirror_tta(PredictorPtr base);

struct TwoChannelInput {
    ScalarVolume image;
    LesionMask prior;
};

/// reorient_ras -> zscore_normalize -> resample(spacing, tricubic).
ScalarVolume preprocess(const ScalarVolume& img, const Vec3& spacing = {1.0, 1.0, 1.0});

/// Empty prior when none is given; otherwise nearest-resampled onto the
/// image grid if the geometries differ.
TwoChannelInput pack_input(const ScalarVolume& img, const std::optional<LesionMask>& prior);

struct WindowOptions {
    double step_fraction = 0.5;
    unsigned workers = 1;
};

/// Window start positions along one axis: stride floor(step * patch), the
/// last window flush with the far edge. n >= patch.
std::vector<int> window_starts(int n, int patch, double step_fraction);

/// Separable Gaussian, sigma = patch / 8 per axis, centred on the patch.
std::vector<double> gaussian_weights(const Dims& patch);

/// Patch-wise prediction blended with Gaussian weights. Volumes smaller
/// than the patch are zero-padded symmetrically and cropped back. The
/// result does not depend on the worker count.
ScalarVolume sliding_window_predict(const TwoChannelInput& input, const Predictor& pred,
                                    const WindowOptions& opts = {});

/// Weighted mean of probability volumes; equal weights when none given.
ScalarVolume fuse_modalities(const std::vector<ScalarVolume>& probs,
                             const std::optional<std::vector<double>>& weights = std::nullopt);

/// prob >= threshold is foreground.
LesionMask binarize(const ScalarVolume& prob, double threshold = 0.5);

struct LongitudinalOptions {
    WindowOptions window;
    double threshold = 0.5;
    bool preprocess_inputs = true;
    /// Prior for the first timepoint; empty mask when absent.
    std::optional<LesionMask> initial_prior;
};

/// One mask per timepoint, each on its scan's (preprocessed) grid. The
/// prediction for timepoint f becomes the prior of f + 1.
std::vector<LesionMask> propagate_longitudinal(const std::vector<ScalarVolume>& scans, const Predictor& pred,
                                               const LongitudinalOptions& opts = {});

}  // namespace lesionsynth::infer
