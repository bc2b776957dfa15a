#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lesionsynth/error.hpp"
#include "lesionsynth/geometry.hpp"

namespace lesionsynth {

/// Dense voxel grid stored x-fastest: index = i + nx * (j + ny * k).
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    explicit Grid(Geometry geom, T fill = T{})
        : geom_(std::move(geom)), data_(geom_.voxel_count(), fill) {}
    Grid(Geometry geom, std::vector<T> data) : geom_(std::move(geom)), data_(std::move(data)) {
        if (data_.size() != geom_.voxel_count()) {
            throw GeometryError("voxel payload length does not match grid dimensions");
        }
    }

    const Geometry& geometry() const { return geom_; }
    const Dims& dims() const { return geom_.dims(); }
    std::size_t size() const { return data_.size(); }

    std::span<const T> data() const { return data_; }
    std::span<T> data() { return data_; }
    const std::vector<T>& values() const { return data_; }

    std::size_t index(int i, int j, int k) const {
        const auto& d = geom_.dims();
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(d[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(d[1]) * static_cast<std::size_t>(k));
    }
    bool contains(int i, int j, int k) const {
        const auto& d = geom_.dims();
        return i >= 0 && j >= 0 && k >= 0 && i < d[0] && j < d[1] && k < d[2];
    }

    T& operator[](std::size_t n) { return data_[n]; }
    const T& operator[](std::size_t n) const { return data_[n]; }
    T& at(int i, int j, int k) { return data_[index(i, j, k)]; }
    const T& at(int i, int j, int k) const { return data_[index(i, j, k)]; }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.geom_.same_grid(b.geom_, 0.0) && a.data_ == b.data_;
    }

protected:
    Geometry geom_;
    std::vector<T> data_;
};

/// Intensity image (I_f). Values are finite reals.
using ScalarVolume = Grid<double>;

/// Binary lesion mask (M, M_b, M_f). Values are 0 or 1.
using LesionMask = Grid<std::uint8_t>;

/// Parcellation with K named classes; every voxel label lies in [0, K).
class LabelVolume : public Grid<std::int32_t> {
public:
    LabelVolume() = default;
    /// Throws ConfigError if K < 2 or a label falls outside [0, K).
    LabelVolume(Geometry geom, std::vector<std::int32_t> labels, std::vector<std::string> class_names);
    /// Class names default to the decimal label ids "0".."K-1".
    LabelVolume(Geometry geom, std::vector<std::int32_t> labels, int num_classes);

    int num_classes() const { return static_cast<int>(class_names_.size()); }
    const std::vector<std::string>& class_names() const { return class_names_; }

    /// Re-checks the label range; call after mutating data() directly.
    void validate() const;

private:
    std::vector<std::string> class_names_;
};

std::vector<std::string> default_class_names(int num_classes);

/// Number of foreground voxels.
std::size_t count_foreground(const LesionMask& mask);

/// True if every voxel value of the scalar image is finite.
bool all_finite(const ScalarVolume& img);

}  // namespace lesionsynth
