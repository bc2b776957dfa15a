#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lesionsynth/rng.hpp"
#include "lesionsynth/volume.hpp"

namespace lesionsynth::synth {

/// Closed interval sampled uniformly.
struct Range {
    double lo = 0.0;
    double hi = 0.0;

    double sample(RngStream& rng) const { return rng.uniform(lo, hi); }
    bool contains(double v) const { return v >= lo && v <= hi; }
    friend bool operator==(const Range&, const Range&) = default;
};

/// Ranges for the random affine and the SVF amplitude. Scale and shear are
/// dimensionless affine factors.
struct SpatialAugmentConfig {
    Range rotation_deg{-15.0, 15.0};
    Range scale{0.8, 1.2};
    Range shear{-0.012, 0.012};
    Range svf_std{0.0, 4.0};
};

struct GmmSynthConfig {
    SpatialAugmentConfig spatial;
    Range mu_range{0.0, 250.0};
    Range sigma_range{0.0, 30.0};
    Range bias_std_range{0.0, 0.3};
    Dims bias_grid{4, 4, 4};
    double aniso_prob = 0.9;
    double aniso_max_spacing_mm = 5.0;
    double clip_max = 300.0;
    double ef_percentile = 80.0;
    int max_retries = 500;
    int svf_grid_divisor = 8;
    int svf_min_grid = 4;
    int svf_steps = 8;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

struct GmmParams {
    std::vector<double> mean;
    std::vector<double> stddev;

    static GmmParams sample(int num_classes, const Range& mu, const Range& sigma, RngStream& rng);
};

struct AffineSample {
    Vec3 rotation_deg{};
    Vec3 scale{1, 1, 1};
    Vec3 shear{};  // xy, xz, yz
    Eigen::Matrix4d matrix = Eigen::Matrix4d::Identity();
};

/// R * S * H with R = Rz * Ry * Rx, S = diag(scale) and H unit upper
/// triangular holding the shears; acts on millimetre coordinates centred on
/// the volume centre, so the translation column is zero.
Eigen::Matrix4d compose_affine(const Vec3& rotation_deg, const Vec3& scale, const Vec3& shear);
AffineSample sample_affine(const SpatialAugmentConfig& cfg, RngStream& rng);

/// Per-voxel displacement (or velocity) in millimetres.
struct DeformationField {
    Geometry geom;
    std::vector<Vec3> vectors;

    static DeformationField zero(const Geometry& geom);
};

/// Control-grid dims used for a smooth random field: max(min_grid, dims / divisor).
Dims control_grid_dims(const Dims& dims, int divisor, int min_grid);

/// Trilinear upsampling of node values laid out x-fastest on `grid`; node
/// a sits at voxel position a * (n - 1) / (g - 1).
std::vector<double> upsample_control_grid(const std::vector<double>& nodes, const Dims& grid, const Dims& dims);

/// I.i.d. Gaussian(0, stddev) velocity per control node and component,
/// trilinearly upsampled.
DeformationField sample_velocity(const Geometry& geom, double stddev, RngStream& rng, int grid_divisor = 8,
                                 int min_grid = 4);
/// Scaling and squaring: exp(v) with v / 2^steps composed with itself `steps` times.
DeformationField integrate_svf(const DeformationField& velocity, int steps = 8);
DeformationField sample_svf_deformation(const Geometry& geom, double svf_std, RngStream& rng,
                                        const GmmSynthConfig& cfg = {});

/// Backward nearest-neighbour warp: output voxel at centred position x
/// reads the input at A^-1 (x + u(x)); out-of-extent reads class 0.
LabelVolume warp_labels(const LabelVolume& parc, const Eigen::Matrix4d& affine, const DeformationField& field);

/// Each voxel ~ Normal(mean[label], stddev[label]), independently. Slice z
/// draws from rng.child(z).
ScalarVolume sample_gmm_image(const LabelVolume& parc, const GmmParams& params, const RngStream& rng);

/// exp of a trilinearly upsampled Gaussian(0, bias_std) control grid.
ScalarVolume sample_bias_field(const Geometry& geom, double bias_std, const Dims& grid, RngStream& rng);
ScalarVolume apply_bias_field(const ScalarVolume& img, double bias_std, const Dims& grid, RngStream& rng);

struct ResolutionSample {
    ScalarVolume image;
    bool applied = false;
    int axis = -1;
    double spacing_mm = 0.0;
    double thickness_mm = 0.0;
};

/// With probability aniso_prob: blur one random axis with a Gaussian whose
/// FWHM equals the slice thickness, subsample to the slice spacing, and
/// linearly upsample back to the original grid.
ResolutionSample randomize_resolution(const ScalarVolume& img, const GmmSynthConfig& cfg, RngStream& rng);
/// The deterministic part of randomize_resolution for a fixed axis, spacing and thickness.
ScalarVolume simulate_thick_slices(const ScalarVolume& img, int axis, double spacing_mm, double thickness_mm);

ScalarVolume clip_intensity(const ScalarVolume& img, double max_value);

/// |mean_a - mean_b| / (sd_a + sd_b) with population statistics. Both sds
/// zero gives 0 for equal means and +inf otherwise. Throws Error when
/// either class has fewer than 2 voxels.
double effect_size(const ScalarVolume& img, const LabelVolume& parc, int class_a, int class_b);

/// ceil(p / 100 * n)-th smallest value (1-based, at least the first).
double nearest_rank_percentile(std::vector<double> values, double percentile);

struct PairEffect {
    int class_a = 0;
    int class_b = 0;
    double ef = 0.0;
};

struct AcceptanceReport {
    bool accepted = false;
    int lesion_class = 0;
    int wm_class = 0;
    double lesion_wm_ef = 0.0;
    double threshold = 0.0;
    double percentile = 80.0;
    std::vector<PairEffect> pairs;
};

/// EF over every unordered pair of classes with at least 2 voxels
/// (lesion-WM pair included); accepted iff EF(lesion, WM) is strictly above
/// the nearest-rank percentile. Fewer than 3 classes present throws
/// Error("degenerate parcellation for EF percentile").
AcceptanceReport accept_scan(const ScalarVolume& img, const LabelVolume& parc, int lesion_class, int wm_class,
                             double percentile);

struct WarpSample {
    LabelVolume labels;
    AffineSample affine;
    double svf_std = 0.0;
};

WarpSample sample_warp(const LabelVolume& parc, const GmmSynthConfig& cfg, RngStream& rng);

struct SynthScan {
    ScalarVolume image;
    LabelVolume labels;        // warped merged parcellation
    LesionMask lesion_mask;    // labels == lesion_class
    AcceptanceReport report;
    GmmParams gmm;
    int attempts = 0;          // total attempts, including the accepted one
    int warp_draws = 0;
};

/// Full domain-randomised scan: warp, GMM sampling, bias field, resolution
/// randomisation, clipping and the EF test. A rejected scan is redrawn with
/// fresh GMM/bias/resolution parameters; a warp that leaves fewer than two
/// lesion voxels is redrawn as well. Each redraw counts towards max_retries,
/// after which Error is thrown. When `shared_warp` is given (and keeps the
/// lesion), it is used instead of drawing a warp.
SynthScan synthesize_scan(const LabelVolume& merged, const GmmSynthConfig& cfg, int lesion_class, int wm_class,
                          const RngStream& rng, const WarpSample* shared_warp = nullptr);

}  // namespace lesionsynth::synth
