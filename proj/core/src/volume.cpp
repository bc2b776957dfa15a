#include "lesionsynth/volume.hpp"

#include <algorithm>
#include <cmath>

namespace lesionsynth {

std::vector<std::string> default_class_names(int num_classes) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(std::max(num_classes, 0)));
    for (int k = 0; k < num_classes; ++k) {
        names.push_back(std::to_string(k));
    }
    return names;
}

LabelVolume::LabelVolume(Geometry geom, std::vector<std::int32_t> labels, std::vector<std::string> class_names)
    : Grid<std::int32_t>(std::move(geom), std::move(labels)), class_names_(std::move(class_names)) {
    validate();
}

LabelVolume::LabelVolume(Geometry geom, std::vector<std::int32_t> labels, int num_classes)
    : LabelVolume(std::move(geom), std::move(labels), default_class_names(num_classes)) {}

void LabelVolume::validate() const {
    if (class_names_.size() < 2) {
        throw ConfigError("label volume needs at least 2 classes");
    }
    const auto k = static_cast<std::int32_t>(class_names_.size());
    for (std::int32_t v : data_) {
        if (v < 0 || v >= k) {
            throw ConfigError("label " + std::to_string(v) + " outside [0, " + std::to_string(k) + ")");
        }
    }
}

std::size_t count_foreground(const LesionMask& mask) {
    return static_cast<std::size_t>(
        std::count_if(mask.data().begin(), mask.data().end(), [](std::uint8_t v) { return v != 0; }));
}

bool all_finite(const ScalarVolume& img) {
    return std::all_of(img.data().begin(), img.data().end(), [](double v) { return std::isfinite(v); });
}

}  // namespace lesionsynth
