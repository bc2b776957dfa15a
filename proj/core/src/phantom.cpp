#include "lesionsynth/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "lesionsynth/error.hpp"
#include "lesionsynth/rng.hpp"

namespace lesionsynth::phantom {
namespace {

double ellipsoid(const std::array<double, 3>& p, const std::array<double, 3>& c, const std::array<double, 3>& r) {
    double s = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
        const double u = (p[a] - c[a]) / r[a];
        s += u * u;
    }
    return std::sqrt(s);
}

}  // namespace

Phantom make(const Options& opts) {
    for (int d : opts.dims) {
        if (d < 8) {
            throw ConfigError("phantom dims must be at least 8 per axis");
        }
    }
    const Geometry geom = Geometry::with_spacing(opts.dims, opts.spacing);
    const Dims& d = opts.dims;
    const std::array<double, 3> centre{(d[0] - 1) / 2.0, (d[1] - 1) / 2.0, (d[2] - 1) / 2.0};
    const std::array<double, 3> head{0.45 * d[0], 0.45 * d[1], 0.45 * d[2]};
    const std::array<double, 3> ventricle{0.08 * d[0], 0.18 * d[1], 0.1 * d[2]};
    const std::array<double, 3> nucleus{0.07 * d[0], 0.1 * d[1], 0.08 * d[2]};

    std::vector<std::int32_t> labels(geom.voxel_count(), kBackground);
    std::size_t n = 0;
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i, ++n) {
                const std::array<double, 3> p{double(i), double(j), double(k)};
                const double r = ellipsoid(p, centre, head);
                int label = kBackground;
                if (r <= 1.0) label = kCsf;
                if (r <= 0.88) label = kGreyMatter;
                if (r <= 0.72) label = kWhiteMatter;
                for (double side : {-1.0, 1.0}) {
                    const std::array<double, 3> vc{centre[0] + side * 0.1 * d[0], centre[1], centre[2]};
                    if (ellipsoid(p, vc, ventricle) <= 1.0) label = kCsf;
                    const std::array<double, 3> nc{centre[0] + side * 0.28 * d[0], centre[1], centre[2] - 0.05 * d[2]};
                    if (ellipsoid(p, nc, nucleus) <= 1.0) label = kDeepGrey;
                }
                labels[n] = label;
            }
        }
    }

    RngStream rng(opts.seed, {0x9a4u});
    LesionMask lesions(geom, 0);
    std::vector<std::size_t> wm;
    for (std::size_t v = 0; v < labels.size(); ++v) {
        if (labels[v] == kWhiteMatter) wm.push_back(v);
    }
    if (wm.empty()) {
        throw ConfigError("phantom has no white matter");
    }
    for (int l = 0; l < opts.lesions; ++l) {
        RngStream lr = rng.child(static_cast<std::uint64_t>(l));
        const std::size_t seed_voxel = wm[lr.below(wm.size())];
        const std::array<double, 3> c{double(seed_voxel % d[0]), double((seed_voxel / d[0]) % d[1]),
                                      double(seed_voxel / (static_cast<std::size_t>(d[0]) * d[1]))};
        const std::array<double, 3> r{lr.uniform(0.8, 3.2), lr.uniform(0.8, 3.2), lr.uniform(0.8, 3.2)};
        for (int k = std::max(0, int(c[2] - r[2]) - 1); k <= std::min(d[2] - 1, int(c[2] + r[2]) + 1); ++k) {
            for (int j = std::max(0, int(c[1] - r[1]) - 1); j <= std::min(d[1] - 1, int(c[1] + r[1]) + 1); ++j) {
                for (int i = std::max(0, int(c[0] - r[0]) - 1); i <= std::min(d[0] - 1, int(c[0] + r[0]) + 1); ++i) {
                    const std::size_t v = lesions.index(i, j, k);
                    if (labels[v] == kWhiteMatter && ellipsoid({double(i), double(j), double(k)}, c, r) <= 1.0) {
                        lesions[v] = 1;
                    }
                }
            }
        }
    }

    constexpr std::array<double, kNumClasses> mean{0.0, 40.0, 90.0, 130.0, 100.0, 200.0};
    RngStream noise = rng.child(1000000);
    ScalarVolume image(geom, 0.0);
    for (std::size_t v = 0; v < labels.size(); ++v) {
        const int cls = lesions[v] ? kLesion : labels[v];
        image[v] = cls == kBackground ? 0.0 : std::max(1.0, noise.normal(mean[static_cast<std::size_t>(cls)], 5.0));
    }
    return {LabelVolume(geom, std::move(labels), kNumClasses), std::move(lesions), std::move(image)};
}

}  // namespace lesionsynth::phantom
