#include "lesionsynth/flm.hpp"

#include <cmath>

namespace lesionsynth::flm {
namespace {

WeightedTransform w(LesionTransform t, double p) {
    return {t, p};
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string LesionTransform::name() const {
    switch (kind) {
        case Kind::stable: return "stable";
        case Kind::remove: return "remove";
        case Kind::erode: return "erode" + std::to_string(iterations);
        case Kind::dilate: return "dilate" + std::to_string(iterations);
    }
    return "?";
}

LesionTransform LesionTransform::parse(std::string_view name) {
    if (name == "stable") return stable();
    if (name == "remove") return remove();
    for (int k = 1; k <= 3; ++k) {
        if (name == "erode" + std::to_string(k)) return erode(k);
        if (name == "dilate" + std::to_string(k)) return dilate(k);
    }
    throw ConfigError("unknown lesion transform '" + std::string(name) + "'");
}

void FlmConfig::validate() const {
    const std::string where = "flm config '" + name + "': ";
    if (bands.empty()) {
        throw ConfigError(where + "bands: at least one band required");
    }
    if (bands.front().min_mm3 != 0.0) {
        throw ConfigError(where + "bands: first band must start at 0");
    }
    if (!std::isinf(bands.back().max_mm3)) {
        throw ConfigError(where + "bands: last band must extend to infinity");
    }
    for (std::size_t b = 0; b < bands.size(); ++b) {
        const VolumeBand& band = bands[b];
        const std::string bw = where + "bands[" + std::to_string(b) + "]: ";
        if (!(band.max_mm3 > band.min_mm3)) {
            throw ConfigError(bw + "max_mm3 must exceed min_mm3");
        }
        if (b > 0 && band.min_mm3 != bands[b - 1].max_mm3) {
            throw ConfigError(bw + "gap or overlap with previous band");
        }
        if (band.dist.empty()) {
            throw ConfigError(bw + "empty transform distribution");
        }
        double total = 0.0;
        for (const auto& wt : band.dist) {
            if (!(wt.probability >= 0.0)) {
                throw ConfigError(bw + "negative probability");
            }
            const auto& t = wt.transform;
            const bool morph = t.kind == LesionTransform::Kind::erode || t.kind == LesionTransform::Kind::dilate;
            if (morph ? (t.iterations < 1 || t.iterations > 3) : t.iterations != 0) {
                throw ConfigError(bw + "iterations must be in {1,2,3} for erode/dilate");
            }
            total += wt.probability;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw ConfigError(bw + "probabilities sum to " + std::to_string(total) + ", expected 1");
        }
    }
}

const VolumeBand& FlmConfig::band_for(double v) const {
    for (std::size_t b = 0; b < bands.size(); ++b) {
        const VolumeBand& band = bands[b];
        const bool below_max = band.max_inclusive ? v <= band.max_mm3 : v < band.max_mm3;
        if (below_max) {
            return band;
        }
    }
    return bands.back();
}

FlmConfig aggressive_preset() {
    using T = LesionTransform;
    FlmConfig cfg;
    cfg.name = "aggressive";
    cfg.bands = {
        {0.0, 200.0, false, {w(T::stable(), 0.90), w(T::remove(), 0.10)}},
        {200.0, 1000.0, false,
         {w(T::stable(), 0.70), w(T::erode(1), 0.10), w(T::dilate(1), 0.10), w(T::remove(), 0.10)}},
        {1000.0, kInf, false,
         {w(T::stable(), 0.55), w(T::erode(1), 0.15), w(T::dilate(1), 0.15), w(T::remove(), 0.15)}},
    };
    return cfg;
}

FlmConfig realistic_preset() {
    using T = LesionTransform;
    FlmConfig cfg;
    cfg.name = "realistic";
    cfg.bands = {
        // Small lesions: erosion capped at two iterations, the three-voxel mass moved to two.
        {0.0, 250.0, false,
         {w(T::stable(), 0.30), w(T::erode(1), 0.35), w(T::erode(2), 0.10), w(T::remove(), 0.24),
          w(T::dilate(1), 0.01)}},
        {250.0, 2500.0, true,
         {w(T::stable(), 0.30), w(T::erode(1), 0.35), w(T::erode(2), 0.08), w(T::erode(3), 0.02),
          w(T::remove(), 0.24), w(T::dilate(1), 0.01)}},
        {2500.0, kInf, false, {w(T::stable(), 1.0)}},
    };
    return cfg;
}

FlmConfig identity_config() {
    FlmConfig cfg;
    cfg.name = "identity";
    cfg.bands = {{0.0, kInf, false, {w(LesionTransform::stable(), 1.0)}}};
    return cfg;
}

std::vector<std::string> preset_names() {
    return {"aggressive", "realistic", "identity"};
}

FlmConfig preset(std::string_view name) {
    if (name == "aggressive") return aggressive_preset();
    if (name == "realistic") return realistic_preset();
    if (name == "identity") return identity_config();
    std::string valid;
    for (const auto& n : preset_names()) {
        valid += (valid.empty() ? "" : ", ") + n;
    }
    throw ConfigError("unknown FLM preset '" + std::string(name) + "' (valid: " + valid + ")");
}

LesionTransform sample_transform(double volume_mm3, const FlmConfig& cfg, RngStream& rng) {
    const VolumeBand& band = cfg.band_for(volume_mm3);
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (const auto& wt : band.dist) {
        cumulative += wt.probability;
        if (u < cumulative) {
            return wt.transform;
        }
    }
    // Rounding left u above the final cumulative sum: take the last non-zero entry.
    for (auto it = band.dist.rbegin(); it != band.dist.rend(); ++it) {
        if (it->probability > 0.0) {
            return it->transform;
        }
    }
    return band.dist.back().transform;
}

PriorResult simulate_prior_detailed(const LesionMask& mask, const FlmConfig& cfg, const RngStream& rng) {
    const morph::ComponentMap cm = morph::connected_components(mask, kLesionConnectivity);
    PriorResult result{LesionMask(mask.geometry()), {}};
    result.lesions.reserve(static_cast<std::size_t>(cm.count()));
    for (int id = 1; id <= cm.count(); ++id) {
        RngStream lesion_rng = rng.child(static_cast<std::uint64_t>(id));
        LesionOutcome outcome;
        outcome.component_id = id;
        outcome.volume_mm3 = cm.volumes_mm3[static_cast<std::size_t>(id - 1)];
        outcome.transform = sample_transform(outcome.volume_mm3, cfg, lesion_rng);
        const auto& t = outcome.transform;
        switch (t.kind) {
            case LesionTransform::Kind::stable: {
                const auto patch = morph::BinaryPatch::from_component(cm, id, 0);
                patch.paste_into(result.mask);
                outcome.voxels_after = patch.count();
                break;
            }
            case LesionTransform::Kind::erode: {
                const auto patch = morph::erode(morph::BinaryPatch::from_component(cm, id, 0), t.iterations);
                patch.paste_into(result.mask);
                outcome.voxels_after = patch.count();
                break;
            }
            case LesionTransform::Kind::dilate: {
                const auto patch = morph::dilate(morph::BinaryPatch::from_component(cm, id, t.iterations), t.iterations);
                patch.paste_into(result.mask);
                outcome.voxels_after = patch.count();
                break;
            }
            case LesionTransform::Kind::remove:
                break;
        }
        result.lesions.push_back(outcome);
    }
    return result;
}

LesionMask simulate_prior(const LesionMask& mask, const FlmConfig& cfg, const RngStream& rng) {
    return simulate_prior_detailed(mask, cfg, rng).mask;
}

LesionMask clamp_to_plausible(const LesionMask& mask, const LabelVolume& parc, const std::set<int>& forbidden) {
    require_same_grid(mask.geometry(), parc.geometry(), "lesion mask vs parcellation");
    LesionMask out = mask;
    if (forbidden.empty()) {
        return out;
    }
    for (std::size_t n = 0; n < out.size(); ++n) {
        if (out[n] && forbidden.contains(parc[n])) {
            out[n] = 0;
        }
    }
    return out;
}

LabelVolume merge_lesions_into_parcellation(const LabelVolume& parc, const LesionMask& mask, int lesion_class) {
    require_same_grid(mask.geometry(), parc.geometry(), "lesion mask vs parcellation");
    if (lesion_class < 0 || lesion_class >= parc.num_classes()) {
        throw ConfigError("lesion_class " + std::to_string(lesion_class) + " is not a parcellation class");
    }
    LabelVolume out = parc;
    for (std::size_t n = 0; n < out.size(); ++n) {
        if (mask[n]) {
            out[n] = lesion_class;
        }
    }
    return out;
}

}  // namespace lesionsynth::flm
