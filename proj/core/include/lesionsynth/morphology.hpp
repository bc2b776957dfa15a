#pragma once

#include <cstdint>
#include <vector>

#include "lesionsynth/volume.hpp"

namespace lesionsynth::morph {

/// Inclusive-exclusive voxel box [lo, hi).
struct Box {
    Dims lo{};
    Dims hi{};
};

/// Connected components of a binary mask.
///
/// labels: 0 = background, 1..C = component ids, assigned in ascending order
/// of each component's first voxel in x-fastest linear order.
struct ComponentMap {
    Geometry geom;
    std::vector<std::int32_t> labels;
    std::vector<std::size_t> voxel_counts;  // index c-1 for component c
    std::vector<double> volumes_mm3;
    std::vector<Box> boxes;

    int count() const { return static_cast<int>(voxel_counts.size()); }
    /// Binary mask of every labelled voxel.
    LesionMask foreground() const;
};

/// connectivity is 6, 18 or 26 (ConfigError otherwise).
ComponentMap connected_components(const LesionMask& mask, int connectivity = 26);

/// Sub-box of a parent volume holding a binary voxel set. Voxels outside
/// the patch count as background, and dilation never grows past the patch
/// edge, so patches are cut with enough padding for the operation applied.
class BinaryPatch {
public:
    BinaryPatch(Dims parent_dims, Dims origin, Dims dims);

    /// Whole-volume patch.
    static BinaryPatch from_mask(const LesionMask& mask);
    /// Component `id` cropped to its bounding box grown by `pad` voxels on
    /// every side and clipped to the volume.
    static BinaryPatch from_component(const ComponentMap& cm, int id, int pad);

    const Dims& origin() const { return origin_; }
    const Dims& dims() const { return dims_; }
    const Dims& parent_dims() const { return parent_; }

    std::uint8_t get(int i, int j, int k) const { return bits_[index(i, j, k)]; }
    void set(int i, int j, int k, std::uint8_t v) { bits_[index(i, j, k)] = v; }
    std::size_t count() const;
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims_[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k);
    }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    /// ORs the set voxels into a whole-volume mask.
    void paste_into(LesionMask& mask) const;

private:
    Dims parent_;
    Dims origin_;
    Dims dims_;
    std::vector<std::uint8_t> bits_;
};

/// k iterations of erosion with the 6-connected cross: each iteration
/// removes every set voxel with a face neighbour outside the set.
BinaryPatch erode(const BinaryPatch& set, int iterations);
/// k iterations of dilation with the 6-connected cross, clipped to the patch.
BinaryPatch dilate(const BinaryPatch& set, int iterations);

LesionMask erode(const LesionMask& mask, int iterations);
LesionMask dilate(const LesionMask& mask, int iterations);

inline double component_volume_mm3(std::size_t voxel_count, const Geometry& geom) {
    return static_cast<double>(voxel_count) * geom.voxel_volume_mm3();
}

}  // namespace lesionsynth::morph
