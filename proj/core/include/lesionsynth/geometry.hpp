#pragma once

#include <array>
#include <cstddef>

#include <Eigen/Dense>

namespace lesionsynth {

using Dims = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

/// Voxel grid description: dimensions plus the voxel-index -> world-mm affine.
///
/// Spacing is not stored independently; it is the column norms of the
/// affine's linear part, so the two can never disagree.
class Geometry {
public:
    Geometry() : Geometry(Dims{1, 1, 1}, Eigen::Matrix4d::Identity()) {}

    /// Throws GeometryError for non-positive dims or a singular affine.
    Geometry(Dims dims, const Eigen::Matrix4d& affine);

    /// Axis-aligned grid with the given spacing and world origin at voxel 0.
    static Geometry with_spacing(Dims dims, Vec3 spacing, Vec3 origin = {0, 0, 0});

    const Dims& dims() const { return dims_; }
    const Eigen::Matrix4d& affine() const { return affine_; }
    const Eigen::Matrix4d& inverse_affine() const { return inverse_; }
    const Vec3& spacing() const { return spacing_; }

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims_[0]) * static_cast<std::size_t>(dims_[1]) *
               static_cast<std::size_t>(dims_[2]);
    }
    double voxel_volume_mm3() const { return spacing_[0] * spacing_[1] * spacing_[2]; }

    Eigen::Vector3d voxel_to_world(const Eigen::Vector3d& ijk) const;
    Eigen::Vector3d world_to_voxel(const Eigen::Vector3d& xyz) const;

    /// Same dims and affines equal within `tol` (absolute, per entry).
    bool same_grid(const Geometry& other, double tol = 1e-6) const;

private:
    Dims dims_;
    Eigen::Matrix4d affine_;
    Eigen::Matrix4d inverse_;
    Vec3 spacing_{};
};

/// Throws GeometryError naming `what` when the two grids differ.
void require_same_grid(const Geometry& a, const Geometry& b, const char* what);

}  // namespace lesionsynth
