#pragma once

#include <filesystem>
#include <optional>
#include <variant>

#include "lesionsynth/volume.hpp"

namespace lesionsynth {

/// On-disk voxel types supported by the reader and writer.
enum class NiftiDatatype : short {
    uint8 = 2,
    int16 = 4,
    int32 = 8,
    float32 = 16,
    float64 = 64,
};

struct NiftiWriteOptions {
    /// When unset, a payload type is chosen from the volume type and value range.
    std::optional<NiftiDatatype> datatype;
    /// gzip compression level used for ".gz" paths.
    int compression_level = 6;
};

/// Integer payloads with non-negative values and unit scaling become
/// LabelVolume (K = max label + 1, at least 2); everything else becomes
/// ScalarVolume with scl_slope/scl_inter applied.
using NiftiVolume = std::variant<ScalarVolume, LabelVolume>;

/// Reads a single-file NIfTI-1 volume (.nii or .nii.gz).
///
/// Geometry comes from the sform when sform_code > 0, else the qform when
/// qform_code > 0, else pixdim scaling. Throws IoError on unreadable or
/// malformed files and on unsupported datatypes or dimensionality.
NiftiVolume read_nifti(const std::filesystem::path& path);

ScalarVolume read_nifti_scalar(const std::filesystem::path& path);
LabelVolume read_nifti_labels(const std::filesystem::path& path);
/// Any datatype; voxels with a non-zero value are foreground.
LesionMask read_nifti_mask(const std::filesystem::path& path);

/// Writes a NIfTI-1 single file; gzip-compressed iff the path ends in ".gz".
/// The exact double-precision affine is kept in a comment extension so
/// geometry round-trips without float32 truncation.
void write_nifti(const ScalarVolume& vol, const std::filesystem::path& path, const NiftiWriteOptions& opts = {});
void write_nifti(const LabelVolume& vol, const std::filesystem::path& path, const NiftiWriteOptions& opts = {});
void write_nifti(const LesionMask& vol, const std::filesystem::path& path, const NiftiWriteOptions& opts = {});

}  // namespace lesionsynth
