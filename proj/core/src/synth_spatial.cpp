#include <algorithm>
#include <cmath>
#include <numbers>

#include "lesionsynth/synthgen.hpp"

namespace lesionsynth::synth {
namespace {

double deg2rad(double d) {
    return d * std::numbers::pi / 180.0;
}

// Trilinear interpolation of one component of a vector field at a
// continuous voxel position, clamped to the edge.
Eigen::Vector3d interp_field(const std::vector<Vec3>& f, const Dims& d, const Eigen::Vector3d& p) {
    std::array<int, 3> lo{};
    std::array<int, 3> hi{};
    std::array<double, 3> t{};
    for (int a = 0; a < 3; ++a) {
        const double x = std::clamp(p[a], 0.0, static_cast<double>(d[a] - 1));
        lo[a] = std::min(static_cast<int>(std::floor(x)), d[a] - 1);
        hi[a] = std::min(lo[a] + 1, d[a] - 1);
        t[a] = x - lo[a];
    }
    auto at = [&](int i, int j, int k) -> const Vec3& {
        return f[static_cast<std::size_t>(i) + static_cast<std::size_t>(d[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(d[1]) * k)];
    };
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    for (int c = 0; c < 8; ++c) {
        const int i = (c & 1) ? hi[0] : lo[0];
        const int j = (c & 2) ? hi[1] : lo[1];
        const int k = (c & 4) ? hi[2] : lo[2];
        const double w = ((c & 1) ? t[0] : 1 - t[0]) * ((c & 2) ? t[1] : 1 - t[1]) * ((c & 4) ? t[2] : 1 - t[2]);
        if (w == 0.0) {
            continue;
        }
        const Vec3& v = at(i, j, k);
        out += w * Eigen::Vector3d(v[0], v[1], v[2]);
    }
    return out;
}

}  // namespace

Eigen::Matrix4d compose_affine(const Vec3& rotation_deg, const Vec3& scale, const Vec3& shear) {
    const Eigen::Matrix3d rx = Eigen::AngleAxisd(deg2rad(rotation_deg[0]), Eigen::Vector3d::UnitX()).toRotationMatrix();
    const Eigen::Matrix3d ry = Eigen::AngleAxisd(deg2rad(rotation_deg[1]), Eigen::Vector3d::UnitY()).toRotationMatrix();
    const Eigen::Matrix3d rz = Eigen::AngleAxisd(deg2rad(rotation_deg[2]), Eigen::Vector3d::UnitZ()).toRotationMatrix();
    Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
    h(0, 1) = shear[0];
    h(0, 2) = shear[1];
    h(1, 2) = shear[2];
    const Eigen::Matrix3d s = Eigen::Vector3d(scale[0], scale[1], scale[2]).asDiagonal();
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rz * ry * rx * s * h;
    return m;
}

AffineSample sample_affine(const SpatialAugmentConfig& cfg, RngStream& rng) {
    AffineSample s;
    for (double& r : s.rotation_deg) r = cfg.rotation_deg.sample(rng);
    for (double& v : s.scale) v = cfg.scale.sample(rng);
    for (double& v : s.shear) v = cfg.shear.sample(rng);
    s.matrix = compose_affine(s.rotation_deg, s.scale, s.shear);
    return s;
}

DeformationField DeformationField::zero(const Geometry& geom) {
    return {geom, std::vector<Vec3>(geom.voxel_count(), Vec3{0, 0, 0})};
}

Dims control_grid_dims(const Dims& dims, int divisor, int min_grid) {
    Dims g{};
    for (int a = 0; a < 3; ++a) {
        g[a] = std::max(min_grid, dims[a] / std::max(1, divisor));
    }
    return g;
}

std::vector<double> upsample_control_grid(const std::vector<double>& nodes, const Dims& grid, const Dims& dims) {
    // Separable: precompute per-axis node index pairs and weights.
    std::array<std::vector<int>, 3> lo;
    std::array<std::vector<double>, 3> t;
    for (int a = 0; a < 3; ++a) {
        lo[a].resize(static_cast<std::size_t>(dims[a]));
        t[a].resize(static_cast<std::size_t>(dims[a]));
        for (int x = 0; x < dims[a]; ++x) {
            const double g = dims[a] > 1 ? static_cast<double>(x) * (grid[a] - 1) / (dims[a] - 1) : 0.0;
            int l = std::min(static_cast<int>(std::floor(g)), std::max(grid[a] - 2, 0));
            l = std::max(l, 0);
            lo[a][static_cast<std::size_t>(x)] = l;
            t[a][static_cast<std::size_t>(x)] = grid[a] > 1 ? g - l : 0.0;
        }
    }
    auto node = [&](int i, int j, int k) {
        i = std::min(i, grid[0] - 1);
        j = std::min(j, grid[1] - 1);
        k = std::min(k, grid[2] - 1);
        return nodes[static_cast<std::size_t>(i) + static_cast<std::size_t>(grid[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(grid[1]) * k)];
    };
    std::vector<double> out(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
    std::size_t n = 0;
    for (int z = 0; z < dims[2]; ++z) {
        const int k = lo[2][static_cast<std::size_t>(z)];
        const double tz = t[2][static_cast<std::size_t>(z)];
        for (int y = 0; y < dims[1]; ++y) {
            const int j = lo[1][static_cast<std::size_t>(y)];
            const double ty = t[1][static_cast<std::size_t>(y)];
            for (int x = 0; x < dims[0]; ++x, ++n) {
                const int i = lo[0][static_cast<std::size_t>(x)];
                const double tx = t[0][static_cast<std::size_t>(x)];
                const double c00 = node(i, j, k) * (1 - tx) + node(i + 1, j, k) * tx;
                const double c10 = node(i, j + 1, k) * (1 - tx) + node(i + 1, j + 1, k) * tx;
                const double c01 = node(i, j, k + 1) * (1 - tx) + node(i + 1, j, k + 1) * tx;
                const double c11 = node(i, j + 1, k + 1) * (1 - tx) + node(i + 1, j + 1, k + 1) * tx;
                out[n] = (c00 * (1 - ty) + c10 * ty) * (1 - tz) + (c01 * (1 - ty) + c11 * ty) * tz;
            }
        }
    }
    return out;
}

DeformationField sample_velocity(const Geometry& geom, double stddev, RngStream& rng, int grid_divisor, int min_grid) {
    if (stddev < 0) {
        throw ConfigError("svf standard deviation must be >= 0");
    }
    DeformationField v = DeformationField::zero(geom);
    if (stddev == 0.0) {
        return v;
    }
    const Dims grid = control_grid_dims(geom.dims(), grid_divisor, min_grid);
    const std::size_t n_nodes = static_cast<std::size_t>(grid[0]) * grid[1] * grid[2];
    for (int c = 0; c < 3; ++c) {
        std::vector<double> nodes(n_nodes);
        for (double& x : nodes) {
            x = rng.normal(0.0, stddev);
        }
        const std::vector<double> dense = upsample_control_grid(nodes, grid, geom.dims());
        for (std::size_t i = 0; i < dense.size(); ++i) {
            v.vectors[i][static_cast<std::size_t>(c)] = dense[i];
        }
    }
    return v;
}

DeformationField integrate_svf(const DeformationField& velocity, int steps) {
    if (steps < 0) {
        throw ConfigError("svf integration steps must be >= 0");
    }
    const Geometry& g = velocity.geom;
    const Dims& d = g.dims();
    const Vec3& sp = g.spacing();
    const double scale = std::ldexp(1.0, -steps);
    // Work in voxel units.
    std::vector<Vec3> u(velocity.vectors.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
            u[i][static_cast<std::size_t>(a)] = velocity.vectors[i][static_cast<std::size_t>(a)] * scale / sp[static_cast<std::size_t>(a)];
        }
    }
    std::vector<Vec3> next(u.size());
    for (int s = 0; s < steps; ++s) {
        std::size_t n = 0;
        for (int k = 0; k < d[2]; ++k) {
            for (int j = 0; j < d[1]; ++j) {
                for (int i = 0; i < d[0]; ++i, ++n) {
                    const Vec3& ui = u[n];
                    const Eigen::Vector3d p(i + ui[0], j + ui[1], k + ui[2]);
                    const Eigen::Vector3d w = interp_field(u, d, p);
                    next[n] = {ui[0] + w.x(), ui[1] + w.y(), ui[2] + w.z()};
                }
            }
        }
        std::swap(u, next);
    }
    DeformationField out{g, std::move(u)};
    for (auto& v : out.vectors) {
        for (int a = 0; a < 3; ++a) {
            v[static_cast<std::size_t>(a)] *= sp[static_cast<std::size_t>(a)];
        }
    }
    return out;
}

DeformationField sample_svf_deformation(const Geometry& geom, double svf_std, RngStream& rng, const GmmSynthConfig& cfg) {
    const DeformationField v = sample_velocity(geom, svf_std, rng, cfg.svf_grid_divisor, cfg.svf_min_grid);
    if (svf_std == 0.0) {
        return v;
    }
    return integrate_svf(v, cfg.svf_steps);
}

LabelVolume warp_labels(const LabelVolume& parc, const Eigen::Matrix4d& affine, const DeformationField& field) {
    require_same_grid(parc.geometry(), field.geom, "labels vs deformation field");
    const Dims& d = parc.dims();
    const Vec3& sp = parc.geometry().spacing();
    const Eigen::Vector3d centre((d[0] - 1) / 2.0, (d[1] - 1) / 2.0, (d[2] - 1) / 2.0);
    const Eigen::Vector3d spacing(sp[0], sp[1], sp[2]);
    const Eigen::Matrix4d inv = affine.inverse();
    const Eigen::Matrix3d inv_lin = inv.topLeftCorner<3, 3>();
    const Eigen::Vector3d inv_t = inv.topRightCorner<3, 1>();

    std::vector<std::int32_t> out(parc.size(), 0);
    std::size_t n = 0;
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i, ++n) {
                const Vec3& u = field.vectors[n];
                const Eigen::Vector3d x = (Eigen::Vector3d(i, j, k) - centre).cwiseProduct(spacing) +
                                          Eigen::Vector3d(u[0], u[1], u[2]);
                const Eigen::Vector3d src = (inv_lin * x + inv_t).cwiseQuotient(spacing) + centre;
                const int si = static_cast<int>(std::floor(src.x() + 0.5));
                const int sj = static_cast<int>(std::floor(src.y() + 0.5));
                const int sk = static_cast<int>(std::floor(src.z() + 0.5));
                if (parc.contains(si, sj, sk)) {
                    out[n] = parc.at(si, sj, sk);
                }
            }
        }
    }
    return LabelVolume(parc.geometry(), std::move(out), parc.class_names());
}

WarpSample sample_warp(const LabelVolume& parc, const GmmSynthConfig& cfg, RngStream& rng) {
    WarpSample w;
    w.affine = sample_affine(cfg.spatial, rng);
    w.svf_std = cfg.spatial.svf_std.sample(rng);
    RngStream field_rng = rng.child(1);
    const DeformationField field = sample_svf_deformation(parc.geometry(), w.svf_std, field_rng, cfg);
    w.labels = warp_labels(parc, w.affine.matrix, field);
    return w;
}

}  // namespace lesionsynth::synth
