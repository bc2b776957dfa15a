#pragma once

// Helpers and independent reference implementations used as test oracles.
// Nothing here calls into the library code it is used to check.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lesionsynth/rng.hpp"
#include "lesionsynth/volume.hpp"

namespace testsupport {

using lesionsynth::Dims;
using lesionsynth::LesionMask;

class TempDir {
public:
    explicit TempDir(const std::string& tag = "t");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& p);
bool files_equal(const std::filesystem::path& a, const std::filesystem::path& b);

/// Minimal NIfTI-1 writer built from the format description: 348-byte
/// header, 4 extension bytes, raw little-endian payload. Uncompressed.
void write_reference_nifti(const std::filesystem::path& path, const Dims& dims, const Eigen::Matrix4d& affine,
                           short datatype, const std::vector<std::uint8_t>& payload, float slope = 0.0f,
                           float inter = 0.0f, bool byteswap = false);

/// Random mask with the given foreground probability.
LesionMask random_mask(const lesionsynth::Geometry& g, double p, lesionsynth::RngStream& rng);
/// Random blobs: a few seeds grown by random 6-neighbour steps.
LesionMask random_blobs(const lesionsynth::Geometry& g, int blobs, int steps, lesionsynth::RngStream& rng);

/// Union-find component count (independent of the BFS labelling).
int count_components_union_find(const LesionMask& m, int connectivity);

struct Surfel {
    Eigen::Vector3d pos;
    double area;
};
/// Faces enumerated from the background side: every background-or-outside
/// cell adjacent to a foreground voxel contributes the shared face.
std::vector<Surfel> oracle_surfels(const LesionMask& m);
/// All-pairs directed distances with explicit F(zeta) evaluation.
double oracle_directed_hd(const std::vector<Surfel>& a, const std::vector<Surfel>& b, double fraction = 0.95);
double oracle_hd95(const std::vector<Surfel>& a, const std::vector<Surfel>& b);
double oracle_assd(const std::vector<Surfel>& a, const std::vector<Surfel>& b);

/// Lesion-wise Dice from explicit component-pair overlap tests.
double oracle_lesional_dsc(const LesionMask& gt, const LesionMask& pred, double min_mm3);

/// Two-sided exact rank-sum p by enumerating all C(n+m, n) index subsets.
double oracle_wilcoxon_exact(const std::vector<double>& x, const std::vector<double>& y);
/// Large-sample z from the Mann-Whitney U counted pairwise.
double oracle_wilcoxon_normal(const std::vector<double>& x, const std::vector<double>& y);

/// Linear-interpolation quantile computed from the sorted sample.
double oracle_quantile(std::vector<double> v, double q);

/// Kolmogorov-Smirnov statistic of a sample against U(lo, hi).
double ks_uniform(std::vector<double> v, double lo, double hi);
/// Kolmogorov-Smirnov statistic against N(mu, sd).
double ks_normal(std::vector<double> v, double mu, double sd);

}  // namespace testsupport
