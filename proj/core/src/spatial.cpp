#include "lesionsynth/spatial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace lesionsynth {
namespace {

struct AxisMap {
    std::array<int, 3> source_axis{};  // output axis i reads input axis source_axis[i]
    std::array<bool, 3> flip{};
};

AxisMap closest_ras(const Geometry& geom) {
    const Eigen::Matrix3d linear = geom.affine().topLeftCorner<3, 3>();
    std::array<int, 3> perm{0, 1, 2};  // perm[j] = world axis of voxel axis j
    std::array<int, 3> best = perm;
    double best_score = -1.0;
    do {
        double score = 0.0;
        for (int j = 0; j < 3; ++j) {
            score += std::abs(linear(perm[j], j)) / geom.spacing()[j];
        }
        if (score > best_score + 1e-12) {
            best_score = score;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    AxisMap map;
    for (int j = 0; j < 3; ++j) {
        map.source_axis[best[j]] = j;
        map.flip[best[j]] = linear(best[j], j) < 0;
    }
    return map;
}

template <typename T>
std::pair<Geometry, std::vector<T>> reorient_grid(const Grid<T>& vol) {
    const Geometry& g = vol.geometry();
    const AxisMap map = closest_ras(g);
    Dims out_dims{};
    Eigen::Matrix4d t = Eigen::Matrix4d::Zero();
    t(3, 3) = 1.0;
    for (int i = 0; i < 3; ++i) {
        const int j = map.source_axis[i];
        out_dims[i] = g.dims()[j];
        t(j, i) = map.flip[i] ? -1.0 : 1.0;
        t(j, 3) = map.flip[i] ? g.dims()[j] - 1 : 0.0;
    }
    Geometry out_geom(out_dims, g.affine() * t);
    std::vector<T> out(vol.size());
    std::size_t n = 0;
    std::array<int, 3> src{};
    for (int k = 0; k < out_dims[2]; ++k) {
        for (int j = 0; j < out_dims[1]; ++j) {
            for (int i = 0; i < out_dims[0]; ++i, ++n) {
                const std::array<int, 3> o{i, j, k};
                for (int a = 0; a < 3; ++a) {
                    const int axis = map.source_axis[a];
                    src[axis] = map.flip[a] ? g.dims()[axis] - 1 - o[a] : o[a];
                }
                out[n] = vol.at(src[0], src[1], src[2]);
            }
        }
    }
    return {std::move(out_geom), std::move(out)};
}

inline double clamp_index(double x, int n) {
    return std::clamp(x, 0.0, static_cast<double>(n - 1));
}

inline std::array<double, 4> catmull_rom(double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return {0.5 * (-t3 + 2 * t2 - t), 0.5 * (3 * t3 - 5 * t2 + 2), 0.5 * (-3 * t3 + 4 * t2 + t), 0.5 * (t3 - t2)};
}

template <typename T>
T sample_nearest(const Grid<T>& vol, double x, double y, double z) {
    const auto& d = vol.dims();
    const int i = static_cast<int>(std::floor(clamp_index(x, d[0]) + 0.5));
    const int j = static_cast<int>(std::floor(clamp_index(y, d[1]) + 0.5));
    const int k = static_cast<int>(std::floor(clamp_index(z, d[2]) + 0.5));
    return vol.at(std::min(i, d[0] - 1), std::min(j, d[1] - 1), std::min(k, d[2] - 1));
}

template <typename T, typename Sampler>
std::vector<T> pull(const Geometry& source, const Geometry& target, Sampler&& sample) {
    const Eigen::Matrix4d m = source.inverse_affine() * target.affine();
    const Eigen::Vector3d ci = m.block<3, 1>(0, 0);
    const Eigen::Vector3d cj = m.block<3, 1>(0, 1);
    const Eigen::Vector3d ck = m.block<3, 1>(0, 2);
    const Eigen::Vector3d c0 = m.block<3, 1>(0, 3);
    const auto& d = target.dims();
    std::vector<T> out(target.voxel_count());
    std::size_t n = 0;
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            const Eigen::Vector3d row = c0 + cj * j + ck * k;
            for (int i = 0; i < d[0]; ++i, ++n) {
                const Eigen::Vector3d p = row + ci * i;
                out[n] = sample(p.x(), p.y(), p.z());
            }
        }
    }
    return out;
}

}  // namespace

Interp parse_interp(std::string_view name) {
    if (name == "nearest") return Interp::nearest;
    if (name == "trilinear") return Interp::trilinear;
    if (name == "tricubic") return Interp::tricubic;
    throw ConfigError("unknown interpolation mode '" + std::string(name) + "'");
}

ScalarVolume reorient_ras(const ScalarVolume& vol) {
    auto [g, d] = reorient_grid(vol);
    return ScalarVolume(std::move(g), std::move(d));
}

LabelVolume reorient_ras(const LabelVolume& vol) {
    auto [g, d] = reorient_grid(vol);
    return LabelVolume(std::move(g), std::move(d), vol.class_names());
}

LesionMask reorient_ras(const LesionMask& vol) {
    auto [g, d] = reorient_grid(vol);
    return LesionMask(std::move(g), std::move(d));
}

Geometry resampled_geometry(const Geometry& geom, const Vec3& target_spacing) {
    Dims dims{};
    Eigen::Matrix4d a = geom.affine();
    for (int c = 0; c < 3; ++c) {
        if (!(target_spacing[c] > 0)) {
            throw ConfigError("target spacing must be positive");
        }
        const double extent = geom.dims()[c] * geom.spacing()[c] / target_spacing[c];
        dims[c] = std::max(1, static_cast<int>(std::ceil(extent - 1e-9)));
        a.block<3, 1>(0, c) *= target_spacing[c] / geom.spacing()[c];
    }
    return Geometry(dims, a);
}

double sample_trilinear(const ScalarVolume& vol, double x, double y, double z) {
    const auto& d = vol.dims();
    const std::array<double, 3> p{clamp_index(x, d[0]), clamp_index(y, d[1]), clamp_index(z, d[2])};
    std::array<int, 3> lo{};
    std::array<int, 3> hi{};
    std::array<double, 3> f{};
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(static_cast<int>(std::floor(p[a])), d[a] - 1);
        hi[a] = std::min(lo[a] + 1, d[a] - 1);
        f[a] = p[a] - lo[a];
    }
    const double c00 = vol.at(lo[0], lo[1], lo[2]) * (1 - f[0]) + vol.at(hi[0], lo[1], lo[2]) * f[0];
    const double c10 = vol.at(lo[0], hi[1], lo[2]) * (1 - f[0]) + vol.at(hi[0], hi[1], lo[2]) * f[0];
    const double c01 = vol.at(lo[0], lo[1], hi[2]) * (1 - f[0]) + vol.at(hi[0], lo[1], hi[2]) * f[0];
    const double c11 = vol.at(lo[0], hi[1], hi[2]) * (1 - f[0]) + vol.at(hi[0], hi[1], hi[2]) * f[0];
    const double c0 = c00 * (1 - f[1]) + c10 * f[1];
    const double c1 = c01 * (1 - f[1]) + c11 * f[1];
    return c0 * (1 - f[2]) + c1 * f[2];
}

double sample_tricubic(const ScalarVolume& vol, double x, double y, double z) {
    const auto& d = vol.dims();
    const std::array<double, 3> p{clamp_index(x, d[0]), clamp_index(y, d[1]), clamp_index(z, d[2])};
    std::array<std::array<int, 4>, 3> idx{};
    std::array<std::array<double, 4>, 3> w{};
    for (int a = 0; a < 3; ++a) {
        const int base = static_cast<int>(std::floor(p[a]));
        w[a] = catmull_rom(p[a] - base);
        for (int t = 0; t < 4; ++t) {
            idx[a][t] = std::clamp(base - 1 + t, 0, d[a] - 1);
        }
    }
    double acc = 0.0;
    for (int c = 0; c < 4; ++c) {
        double plane = 0.0;
        for (int b = 0; b < 4; ++b) {
            double line = 0.0;
            for (int a = 0; a < 4; ++a) {
                line += w[0][a] * vol.at(idx[0][a], idx[1][b], idx[2][c]);
            }
            plane += w[1][b] * line;
        }
        acc += w[2][c] * plane;
    }
    return acc;
}

ScalarVolume resample_to(const ScalarVolume& vol, const Geometry& target, Interp mode) {
    std::vector<double> out;
    switch (mode) {
        case Interp::nearest:
            out = pull<double>(vol.geometry(), target,
                               [&](double x, double y, double z) { return sample_nearest(vol, x, y, z); });
            break;
        case Interp::trilinear:
            out = pull<double>(vol.geometry(), target,
                               [&](double x, double y, double z) { return sample_trilinear(vol, x, y, z); });
            break;
        case Interp::tricubic:
            out = pull<double>(vol.geometry(), target,
                               [&](double x, double y, double z) { return sample_tricubic(vol, x, y, z); });
            break;
    }
    return ScalarVolume(target, std::move(out));
}

LesionMask resample_to(const LesionMask& vol, const Geometry& target) {
    return LesionMask(target, pull<std::uint8_t>(vol.geometry(), target, [&](double x, double y, double z) {
                          return sample_nearest(vol, x, y, z);
                      }));
}

LabelVolume resample_to(const LabelVolume& vol, const Geometry& target) {
    return LabelVolume(target, pull<std::int32_t>(vol.geometry(), target, [&](double x, double y, double z) {
                           return sample_nearest(vol, x, y, z);
                       }),
                       vol.class_names());
}

ScalarVolume resample(const ScalarVolume& vol, const Vec3& target_spacing, Interp mode) {
    return resample_to(vol, resampled_geometry(vol.geometry(), target_spacing), mode);
}

LabelVolume resample(const LabelVolume& vol, const Vec3& target_spacing, Interp mode) {
    if (mode != Interp::nearest) {
        throw ConfigError("label volumes can only be resampled with nearest-neighbour interpolation");
    }
    return resample_to(vol, resampled_geometry(vol.geometry(), target_spacing));
}

LesionMask resample(const LesionMask& vol, const Vec3& target_spacing, Interp mode) {
    if (mode != Interp::nearest) {
        throw ConfigError("lesion masks can only be resampled with nearest-neighbour interpolation");
    }
    return resample_to(vol, resampled_geometry(vol.geometry(), target_spacing));
}

ScalarVolume zscore_normalize(const ScalarVolume& img) {
    const auto values = img.data();
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : values) {
        if (v != 0.0) {
            sum += v;
            ++n;
        }
    }
    const bool use_all = n == 0;
    if (use_all) {
        n = values.size();
        sum = std::accumulate(values.begin(), values.end(), 0.0);
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) {
        if (use_all || v != 0.0) {
            ss += (v - mean) * (v - mean);
        }
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
        throw Error("degenerate intensity distribution");
    }
    ScalarVolume out = img;
    for (double& v : out.data()) {
        v = (v - mean) / sd;
    }
    return out;
}

}  // namespace lesionsynth
