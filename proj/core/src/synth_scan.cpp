#include <algorithm>
#include <cmath>
#include <limits>

#include "lesionsynth/synthgen.hpp"

namespace lesionsynth::synth {
namespace {

struct ClassMoments {
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;
};

std::vector<ClassMoments> class_moments(const ScalarVolume& img, const LabelVolume& parc) {
    require_same_grid(img.geometry(), parc.geometry(), "image vs parcellation");
    std::vector<ClassMoments> m(static_cast<std::size_t>(parc.num_classes()));
    std::vector<double> sum(m.size(), 0.0);
    for (std::size_t n = 0; n < img.size(); ++n) {
        const auto k = static_cast<std::size_t>(parc[n]);
        ++m[k].count;
        sum[k] += img[n];
    }
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (m[k].count > 0) {
            m[k].mean = sum[k] / static_cast<double>(m[k].count);
        }
    }
    std::vector<double> ss(m.size(), 0.0);
    for (std::size_t n = 0; n < img.size(); ++n) {
        const auto k = static_cast<std::size_t>(parc[n]);
        const double dv = img[n] - m[k].mean;
        ss[k] += dv * dv;
    }
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (m[k].count > 0) {
            m[k].sd = std::sqrt(ss[k] / static_cast<double>(m[k].count));
        }
    }
    return m;
}

double ef_from_moments(const ClassMoments& a, const ClassMoments& b) {
    const double diff = std::abs(a.mean - b.mean);
    const double denom = a.sd + b.sd;
    if (denom == 0.0) {
        return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return diff / denom;
}

void check_range(const Range& r, const std::string& name, double min_lo = -std::numeric_limits<double>::infinity()) {
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
        throw ConfigError(name + ": range must satisfy lo <= hi");
    }
    if (r.lo < min_lo) {
        throw ConfigError(name + ": lower bound must be >= " + std::to_string(min_lo));
    }
}

std::size_t count_label(const LabelVolume& parc, int label) {
    return static_cast<std::size_t>(std::count(parc.data().begin(), parc.data().end(), label));
}

}  // namespace

void GmmSynthConfig::validate() const {
    check_range(spatial.rotation_deg, "rotation_deg");
    check_range(spatial.scale, "scale", 1e-6);
    check_range(spatial.shear, "shear");
    check_range(spatial.svf_std, "svf_std", 0.0);
    check_range(mu_range, "mu");
    check_range(sigma_range, "sigma", 0.0);
    check_range(bias_std_range, "bias_std", 0.0);
    for (int g : bias_grid) {
        if (g < 1) throw ConfigError("bias_grid: entries must be >= 1");
    }
    if (!(aniso_prob >= 0.0 && aniso_prob <= 1.0)) throw ConfigError("aniso_prob: must lie in [0, 1]");
    if (!(aniso_max_spacing_mm > 0.0)) throw ConfigError("aniso_max_spacing_mm: must be > 0");
    if (!(clip_max > 0.0)) throw ConfigError("clip_max: must be > 0");
    if (!(ef_percentile > 0.0 && ef_percentile < 100.0)) throw ConfigError("ef_percentile: must lie in (0, 100)");
    if (max_retries < 1) throw ConfigError("max_retries: must be >= 1");
    if (svf_grid_divisor < 1) throw ConfigError("svf_grid_divisor: must be >= 1");
    if (svf_min_grid < 2) throw ConfigError("svf_min_grid: must be >= 2");
    if (svf_steps < 0) throw ConfigError("svf_steps: must be >= 0");
}

double effect_size(const ScalarVolume& img, const LabelVolume& parc, int class_a, int class_b) {
    const auto m = class_moments(img, parc);
    for (int c : {class_a, class_b}) {
        if (c < 0 || c >= parc.num_classes() || m[static_cast<std::size_t>(c)].count < 2) {
            throw Error("class " + std::to_string(c) + " has fewer than 2 voxels");
        }
    }
    return ef_from_moments(m[static_cast<std::size_t>(class_a)], m[static_cast<std::size_t>(class_b)]);
}

double nearest_rank_percentile(std::vector<double> values, double percentile) {
    if (values.empty()) {
        throw Error("percentile of an empty set");
    }
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n - 1e-12));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

AcceptanceReport accept_scan(const ScalarVolume& img, const LabelVolume& parc, int lesion_class, int wm_class,
                             double percentile) {
    const auto m = class_moments(img, parc);
    std::vector<int> present;
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (m[k].count >= 2) {
            present.push_back(static_cast<int>(k));
        }
    }
    if (present.size() < 3) {
        throw Error("degenerate parcellation for EF percentile");
    }
    for (int c : {lesion_class, wm_class}) {
        if (c < 0 || c >= parc.num_classes() || m[static_cast<std::size_t>(c)].count < 2) {
            throw Error("class " + std::to_string(c) + " has fewer than 2 voxels");
        }
    }
    AcceptanceReport r;
    r.lesion_class = lesion_class;
    r.wm_class = wm_class;
    r.percentile = percentile;
    std::vector<double> efs;
    for (std::size_t a = 0; a < present.size(); ++a) {
        for (std::size_t b = a + 1; b < present.size(); ++b) {
            const double ef = ef_from_moments(m[static_cast<std::size_t>(present[a])], m[static_cast<std::size_t>(present[b])]);
            r.pairs.push_back({present[a], present[b], ef});
            efs.push_back(ef);
        }
    }
    r.lesion_wm_ef = ef_from_moments(m[static_cast<std::size_t>(lesion_class)], m[static_cast<std::size_t>(wm_class)]);
    r.threshold = nearest_rank_percentile(std::move(efs), percentile);
    r.accepted = std::isinf(r.lesion_wm_ef) || r.lesion_wm_ef > r.threshold;
    return r;
}

SynthScan synthesize_scan(const LabelVolume& merged, const GmmSynthConfig& cfg, int lesion_class, int wm_class,
                          const RngStream& rng, const WarpSample* shared_warp) {
    cfg.validate();
    std::optional<WarpSample> warp;
    if (shared_warp != nullptr && count_label(shared_warp->labels, lesion_class) >= 2) {
        warp = *shared_warp;
    }
    SynthScan scan;
    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
        scan.attempts = attempt + 1;
        if (!warp) {
            RngStream warp_rng = rng.child({0, static_cast<std::uint64_t>(scan.warp_draws)});
            ++scan.warp_draws;
            WarpSample w = sample_warp(merged, cfg, warp_rng);
            if (count_label(w.labels, lesion_class) < 2) {
                continue;
            }
            warp = std::move(w);
        }
        const RngStream draw = rng.child({1, static_cast<std::uint64_t>(attempt)});
        RngStream gmm_rng = draw.child(0);
        scan.gmm = GmmParams::sample(merged.num_classes(), cfg.mu_range, cfg.sigma_range, gmm_rng);
        ScalarVolume img = sample_gmm_image(warp->labels, scan.gmm, draw.child(1));
        RngStream bias_rng = draw.child(2);
        const double bias_std = cfg.bias_std_range.sample(bias_rng);
        img = apply_bias_field(img, bias_std, cfg.bias_grid, bias_rng);
        RngStream res_rng = draw.child(3);
        img = randomize_resolution(img, cfg, res_rng).image;
        img = clip_intensity(img, cfg.clip_max);
        AcceptanceReport report = accept_scan(img, warp->labels, lesion_class, wm_class, cfg.ef_percentile);
        if (!report.accepted) {
            continue;
        }
        scan.image = std::move(img);
        scan.report = std::move(report);
        scan.labels = warp->labels;
        scan.lesion_mask = LesionMask(scan.labels.geometry());
        for (std::size_t n = 0; n < scan.labels.size(); ++n) {
            scan.lesion_mask[n] = scan.labels[n] == lesion_class ? 1 : 0;
        }
        return scan;
    }
    throw Error("EF acceptance retries exhausted after " + std::to_string(cfg.max_retries) + " attempts");
}

}  // namespace lesionsynth::synth
