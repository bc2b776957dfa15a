#pragma once

#include <string_view>

#include "lesionsynth/volume.hpp"

namespace lesionsynth {

enum class Interp { nearest, trilinear, tricubic };

/// Parses "nearest" / "trilinear" / "tricubic"; throws ConfigError otherwise.
Interp parse_interp(std::string_view name);

/// Permutes and flips voxel axes so each axis points closest to +x/+y/+z.
/// World positions of all voxels are unchanged; RAS input is returned as is.
ScalarVolume reorient_ras(const ScalarVolume& vol);
LabelVolume reorient_ras(const LabelVolume& vol);
LesionMask reorient_ras(const LesionMask& vol);

/// Grid with dims ceil(dims * spacing / target) covering the same field of
/// view. Voxel 0 keeps its world position; axis directions are unchanged.
Geometry resampled_geometry(const Geometry& geom, const Vec3& target_spacing);

/// Resamples onto a new spacing. Out-of-extent lookups clamp to the edge.
/// Tricubic uses separable Catmull-Rom weights.
ScalarVolume resample(const ScalarVolume& vol, const Vec3& target_spacing, Interp mode);
/// Labels and masks only accept Interp::nearest (ConfigError otherwise).
LabelVolume resample(const LabelVolume& vol, const Vec3& target_spacing, Interp mode);
LesionMask resample(const LesionMask& vol, const Vec3& target_spacing, Interp mode);

/// Resamples onto an arbitrary target grid through world space.
ScalarVolume resample_to(const ScalarVolume& vol, const Geometry& target, Interp mode);
LesionMask resample_to(const LesionMask& vol, const Geometry& target);
LabelVolume resample_to(const LabelVolume& vol, const Geometry& target);

/// Interpolated value at a continuous voxel index, clamped to the edge.
double sample_trilinear(const ScalarVolume& vol, double x, double y, double z);
double sample_tricubic(const ScalarVolume& vol, double x, double y, double z);

/// Z-scores intensities using the mean and population standard deviation of
/// the non-zero voxels (all voxels when none are non-zero). Every voxel,
/// including zero background, goes through the same (v - mean) / sd map.
/// Throws Error("degenerate intensity distribution") when sd is zero.
ScalarVolume zscore_normalize(const ScalarVolume& img);

}  // namespace lesionsynth
