#include "lesionsynth/geometry.hpp"

#include <cmath>
#include <string>

#include "lesionsynth/error.hpp"

namespace lesionsynth {

Geometry::Geometry(Dims dims, const Eigen::Matrix4d& affine) : dims_(dims), affine_(affine) {
    for (int d : dims_) {
        if (d <= 0) {
            throw GeometryError("grid dimensions must be positive");
        }
    }
    if (!affine_.allFinite()) {
        throw GeometryError("affine contains non-finite entries");
    }
    const Eigen::Matrix3d linear = affine_.topLeftCorner<3, 3>();
    const double det = linear.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-12) {
        throw GeometryError("affine is not invertible");
    }
    for (int c = 0; c < 3; ++c) {
        spacing_[c] = linear.col(c).norm();
    }
    affine_.row(3) << 0, 0, 0, 1;
    inverse_ = affine_.inverse();
}

Geometry Geometry::with_spacing(Dims dims, Vec3 spacing, Vec3 origin) {
    Eigen::Matrix4d a = Eigen::Matrix4d::Identity();
    for (int c = 0; c < 3; ++c) {
        if (!(spacing[c] > 0)) {
            throw GeometryError("spacing must be positive");
        }
        a(c, c) = spacing[c];
        a(c, 3) = origin[c];
    }
    return Geometry(dims, a);
}

Eigen::Vector3d Geometry::voxel_to_world(const Eigen::Vector3d& ijk) const {
    return affine_.topLeftCorner<3, 3>() * ijk + affine_.topRightCorner<3, 1>();
}

Eigen::Vector3d Geometry::world_to_voxel(const Eigen::Vector3d& xyz) const {
    return inverse_.topLeftCorner<3, 3>() * xyz + inverse_.topRightCorner<3, 1>();
}

bool Geometry::same_grid(const Geometry& other, double tol) const {
    if (dims_ != other.dims_) {
        return false;
    }
    return ((affine_ - other.affine_).cwiseAbs().maxCoeff() <= tol);
}

void require_same_grid(const Geometry& a, const Geometry& b, const char* what) {
    if (!a.same_grid(b)) {
        throw GeometryError(std::string("geometry mismatch: ") + what);
    }
}

}  // namespace lesionsynth
