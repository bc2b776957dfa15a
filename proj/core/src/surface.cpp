#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lesionsynth/error.hpp"
#include "lesionsynth/metrics.hpp"

namespace lesionsynth::metrics {
namespace {

// Uniform bucket grid over a point set for exact nearest-neighbour queries.
class SurfelIndex {
public:
    explicit SurfelIndex(const std::vector<Eigen::Vector3d>& points) : points_(points) {
        lo_ = points.front();
        Eigen::Vector3d hi = points.front();
        for (const auto& p : points) {
            lo_ = lo_.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const Eigen::Vector3d extent = (hi - lo_).cwiseMax(1e-9);
        // Roughly two points per occupied cell for surface-like sets.
        const double volume = extent.prod();
        const double target_cells = std::max(1.0, static_cast<double>(points.size()) / 2.0);
        cell_ = std::max(std::cbrt(volume / target_cells), extent.maxCoeff() / 256.0);
        cell_ = std::max(cell_, 1e-6);
        for (int a = 0; a < 3; ++a) {
            dims_[a] = std::max(1, static_cast<int>(std::floor(extent[a] / cell_)) + 1);
        }
        const std::size_t n_cells = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
        start_.assign(n_cells + 1, 0);
        std::vector<std::size_t> cell_of(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            cell_of[i] = flat(cell_coords(points[i]));
            ++start_[cell_of[i] + 1];
        }
        std::partial_sum(start_.begin(), start_.end(), start_.begin());
        order_.resize(points.size());
        std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < points.size(); ++i) {
            order_[fill[cell_of[i]]++] = i;
        }
    }

    double nearest(const Eigen::Vector3d& q) const {
        const std::array<int, 3> c = cell_coords(q);
        double best_sq = std::numeric_limits<double>::infinity();
        const int max_r = std::max({dims_[0], dims_[1], dims_[2]});
        for (int r = 0; r <= max_r; ++r) {
            visit_shell(c, r, q, best_sq);
            // Every unvisited cell lies at least r * cell_ away along some axis.
            const double bound = r * cell_;
            if (std::isfinite(best_sq) && best_sq <= bound * bound) {
                break;
            }
        }
        return std::sqrt(best_sq);
    }

private:
    std::array<int, 3> cell_coords(const Eigen::Vector3d& p) const {
        std::array<int, 3> c{};
        for (int a = 0; a < 3; ++a) {
            const int v = static_cast<int>(std::floor((p[a] - lo_[a]) / cell_));
            c[a] = std::clamp(v, 0, dims_[a] - 1);
        }
        return c;
    }

    std::size_t flat(const std::array<int, 3>& c) const {
        return static_cast<std::size_t>(c[0]) +
               static_cast<std::size_t>(dims_[0]) * (static_cast<std::size_t>(c[1]) + static_cast<std::size_t>(dims_[1]) * c[2]);
    }

    void visit_cell(int x, int y, int z, const Eigen::Vector3d& q, double& best_sq) const {
        const std::size_t f = flat({x, y, z});
        for (std::size_t s = start_[f]; s < start_[f + 1]; ++s) {
            const double d = (points_[order_[s]] - q).squaredNorm();
            best_sq = std::min(best_sq, d);
        }
    }

    void visit_shell(const std::array<int, 3>& c, int r, const Eigen::Vector3d& q, double& best_sq) const {
        const int z0 = std::max(0, c[2] - r);
        const int z1 = std::min(dims_[2] - 1, c[2] + r);
        const int y0 = std::max(0, c[1] - r);
        const int y1 = std::min(dims_[1] - 1, c[1] + r);
        const int x0 = std::max(0, c[0] - r);
        const int x1 = std::min(dims_[0] - 1, c[0] + r);
        for (int z = z0; z <= z1; ++z) {
            const bool z_edge = std::abs(z - c[2]) == r;
            for (int y = y0; y <= y1; ++y) {
                const bool yz_edge = z_edge || std::abs(y - c[1]) == r;
                if (yz_edge) {
                    for (int x = x0; x <= x1; ++x) {
                        visit_cell(x, y, z, q, best_sq);
                    }
                } else {
                    if (c[0] - r >= 0) visit_cell(c[0] - r, y, z, q, best_sq);
                    if (r > 0 && c[0] + r < dims_[0]) visit_cell(c[0] + r, y, z, q, best_sq);
                }
            }
        }
    }

    const std::vector<Eigen::Vector3d>& points_;
    Eigen::Vector3d lo_;
    double cell_ = 1.0;
    std::array<int, 3> dims_{};
    std::vector<std::size_t> start_;
    std::vector<std::size_t> order_;
};

}  // namespace

double SurfelSet::total_area() const {
    return std::accumulate(areas.begin(), areas.end(), 0.0);
}

SurfelSet extract_surfels(const LesionMask& mask) {
    const Geometry& g = mask.geometry();
    const Dims& d = mask.dims();
    const Vec3& sp = g.spacing();
    const std::array<double, 3> face_area{sp[1] * sp[2], sp[0] * sp[2], sp[0] * sp[1]};
    SurfelSet s;
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i) {
                if (!mask.at(i, j, k)) {
                    continue;
                }
                const std::array<int, 3> v{i, j, k};
                for (int axis = 0; axis < 3; ++axis) {
                    for (int side : {-1, 1}) {
                        std::array<int, 3> nb = v;
                        nb[static_cast<std::size_t>(axis)] += side;
                        if (mask.contains(nb[0], nb[1], nb[2]) && mask.at(nb[0], nb[1], nb[2])) {
                            continue;
                        }
                        Eigen::Vector3d centre(i, j, k);
                        centre[axis] += 0.5 * side;
                        s.positions.push_back(g.voxel_to_world(centre));
                        s.areas.push_back(face_area[static_cast<std::size_t>(axis)]);
                    }
                }
            }
        }
    }
    return s;
}

std::vector<DirectedDistance> directed_distance_set(const SurfelSet& from, const SurfelSet& to) {
    if (to.empty()) {
        throw Error("distance to empty surface undefined");
    }
    const SurfelIndex index(to.positions);
    std::vector<DirectedDistance> out(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) {
        out[i] = {index.nearest(from.positions[i]), from.areas[i]};
    }
    return out;
}

double directed_percentile_distance(std::vector<DirectedDistance> dists, double fraction) {
    if (dists.empty()) {
        throw Error("distance to empty surface undefined");
    }
    std::sort(dists.begin(), dists.end(),
              [](const DirectedDistance& a, const DirectedDistance& b) { return a.distance < b.distance; });
    double total = 0.0;
    for (const auto& d : dists) {
        total += d.area;
    }
    double cumulative = 0.0;
    for (const auto& d : dists) {
        cumulative += d.area;
        if (cumulative / total >= fraction) {
            return d.distance;
        }
    }
    return dists.back().distance;
}

double hd95(const SurfelSet& a, const SurfelSet& b) {
    return std::max(directed_percentile_distance(directed_distance_set(a, b)),
                    directed_percentile_distance(directed_distance_set(b, a)));
}

double assd(const SurfelSet& a, const SurfelSet& b) {
    // Each direction is summed on its own so that swapping a and b gives
    // bit-identical results.
    auto weighted = [](const SurfelSet& from, const SurfelSet& to) {
        double s = 0.0;
        for (const auto& d : directed_distance_set(from, to)) {
            s += d.area * d.distance;
        }
        return s;
    };
    return (weighted(a, b) + weighted(b, a)) / (a.total_area() + b.total_area());
}

}  // namespace lesionsynth::metrics
