#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lesionsynth/morphology.hpp"
#include "lesionsynth/volume.hpp"

namespace lesionsynth::metrics {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(const LesionMask& gt, const LesionMask& pred);

/// TP / (TP + FP); 0 when nothing is predicted.
double ppv(const ConfusionCounts& c);
/// FP / (TN + FP); throws Error("no negative voxels") when TN + FP = 0.
double fpr(const ConfusionCounts& c);
/// 2TP / (2TP + FP + FN); 1 when both masks are empty.
double dsc(const ConfusionCounts& c);
/// TP / (TP + FN); 0 when the reference is empty.
double sensitivity(const ConfusionCounts& c);

/// Drops components with volume <= min_mm3 and relabels the rest
/// contiguously in their original order.
morph::ComponentMap filter_small_lesions(const morph::ComponentMap& cm, double min_mm3 = 3.0);

struct LesionCounts {
    int tp = 0;
    int fp = 0;
    int fn = 0;
};

/// TP: reference components touching any predicted voxel. FP: predicted
/// components touching no reference voxel. FN: reference components
/// touching no predicted voxel.
LesionCounts lesion_counts(const morph::ComponentMap& gt, const morph::ComponentMap& pred);
/// Lesion-wise Dice; 1 when both maps are empty, 0 when exactly one is.
double lesional_dsc(const morph::ComponentMap& gt, const morph::ComponentMap& pred);

/// Boundary surface elements: one per exposed voxel face.
struct SurfelSet {
    std::vector<Eigen::Vector3d> positions;  // face centres, world mm
    std::vector<double> areas;               // mm^2

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
    double total_area() const;
};

/// A face is exposed when the neighbour across it is background or outside
/// the volume. Area is the product of the two in-plane spacings.
SurfelSet extract_surfels(const LesionMask& mask);

struct DirectedDistance {
    double distance = 0.0;
    double area = 0.0;
};

/// Exact nearest-neighbour distance from every surfel of `from` to `to`,
/// paired with the surfel's own area, in `from` order. Throws
/// Error("distance to empty surface undefined") if `to` is empty.
std::vector<DirectedDistance> directed_distance_set(const SurfelSet& from, const SurfelSet& to);

/// Smallest observed distance whose area-weighted cumulative fraction
/// reaches `fraction`.
double directed_percentile_distance(std::vector<DirectedDistance> dists, double fraction = 0.95);
double hd95(const SurfelSet& a, const SurfelSet& b);
double assd(const SurfelSet& a, const SurfelSet& b);

struct EvalOptions {
    double min_lesion_mm3 = 3.0;
    int connectivity = 26;
    /// Also drop small lesions before voxel-level and distance metrics.
    bool filter_voxel_metrics = false;
};

struct CaseMetrics {
    double dsc = 0.0;
    double lesional_dsc = 0.0;
    double ppv = 0.0;
    double fpr = 0.0;
    std::optional<double> hd95_mm;
    std::optional<double> assd_mm;
    bool pred_empty = false;
    double gt_volume_mm3 = 0.0;
    double pred_volume_mm3 = 0.0;
};

/// Voxel metrics on the raw masks, lesion-wise Dice after small-lesion
/// filtering. Empty prediction: overlap metrics 0 and null distances, except
/// that two empty masks score perfect agreement (Dice, lesional Dice and
/// PPV 1, FPR 0). Distances are null whenever either surface is empty.
CaseMetrics evaluate_case(const LesionMask& gt, const LesionMask& pred, const EvalOptions& opts = {});

}  // namespace lesionsynth::metrics
