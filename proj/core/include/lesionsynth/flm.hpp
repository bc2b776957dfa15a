#pragma once

#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lesionsynth/morphology.hpp"
#include "lesionsynth/rng.hpp"
#include "lesionsynth/volume.hpp"

namespace lesionsynth::flm {

/// Per-lesion evolution transform, applied in reverse time: erosion
/// simulates growth, dilation shrinkage, removal a new lesion.
struct LesionTransform {
    enum class Kind { stable, erode, dilate, remove };

    Kind kind = Kind::stable;
    int iterations = 0;  // 1..3 for erode/dilate, 0 otherwise

    static LesionTransform stable() { return {Kind::stable, 0}; }
    static LesionTransform remove() { return {Kind::remove, 0}; }
    static LesionTransform erode(int k) { return {Kind::erode, k}; }
    static LesionTransform dilate(int k) { return {Kind::dilate, k}; }

    /// "stable", "remove", "erode1".."erode3", "dilate1".."dilate3".
    std::string name() const;
    static LesionTransform parse(std::string_view name);

    friend bool operator==(const LesionTransform&, const LesionTransform&) = default;
};

struct WeightedTransform {
    LesionTransform transform;
    double probability = 0.0;
};

/// Categorical transform distribution for lesions with volume in the band.
/// The lower edge is inclusive unless the previous band's upper edge was.
struct VolumeBand {
    double min_mm3 = 0.0;
    double max_mm3 = std::numeric_limits<double>::infinity();
    bool max_inclusive = false;
    std::vector<WeightedTransform> dist;
};

struct FlmConfig {
    std::string name;
    std::vector<VolumeBand> bands;

    /// Throws ConfigError if the bands do not tile [0, inf) or a
    /// distribution is malformed.
    void validate() const;
    /// Band containing the volume; volumes are non-negative.
    const VolumeBand& band_for(double volume_mm3) const;
};

/// Preset used for the first, variability-oriented FLM pass.
FlmConfig aggressive_preset();
/// Preset used to simulate plausible prior timepoints.
FlmConfig realistic_preset();
/// Single band with {stable: 1}.
FlmConfig identity_config();

std::vector<std::string> preset_names();
/// Throws ConfigError listing the valid names for an unknown preset.
FlmConfig preset(std::string_view name);

/// Inverse-CDF draw over the band's distribution in declared order.
LesionTransform sample_transform(double volume_mm3, const FlmConfig& cfg, RngStream& rng);

struct LesionOutcome {
    int component_id = 0;
    double volume_mm3 = 0.0;
    LesionTransform transform;
    std::size_t voxels_after = 0;
};

struct PriorResult {
    LesionMask mask;
    std::vector<LesionOutcome> lesions;
};

/// Lesion identity for FLM uses this connectivity.
inline constexpr int kLesionConnectivity = 26;

/// Applies an independently drawn transform to every 26-connected lesion.
/// Component c draws from rng.child(c), so adding a lesion never perturbs
/// the draws of others. Results are unioned; a lesion eroded away is absent.
PriorResult simulate_prior_detailed(const LesionMask& mask, const FlmConfig& cfg, const RngStream& rng);
LesionMask simulate_prior(const LesionMask& mask, const FlmConfig& cfg, const RngStream& rng);

/// mask AND NOT (parc in forbidden).
LesionMask clamp_to_plausible(const LesionMask& mask, const LabelVolume& parc, const std::set<int>& forbidden);

/// Voxels with mask = 1 take lesion_class; all others keep their label.
LabelVolume merge_lesions_into_parcellation(const LabelVolume& parc, const LesionMask& mask, int lesion_class);

}  // namespace lesionsynth::flm
