#include "lesionsynth/metrics.hpp"

#include <algorithm>

namespace lesionsynth::metrics {

ConfusionCounts confusion(const LesionMask& gt, const LesionMask& pred) {
    require_same_grid(gt.geometry(), pred.geometry(), "reference vs prediction");
    ConfusionCounts c;
    for (std::size_t n = 0; n < gt.size(); ++n) {
        const bool g = gt[n] != 0;
        const bool p = pred[n] != 0;
        if (g && p) {
            ++c.tp;
        } else if (p) {
            ++c.fp;
        } else if (g) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

double ppv(const ConfusionCounts& c) {
    const auto denom = c.tp + c.fp;
    return denom == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

double fpr(const ConfusionCounts& c) {
    const auto denom = c.tn + c.fp;
    if (denom == 0) {
        throw Error("no negative voxels");
    }
    return static_cast<double>(c.fp) / static_cast<double>(denom);
}

double dsc(const ConfusionCounts& c) {
    const auto denom = 2 * c.tp + c.fp + c.fn;
    return denom == 0 ? 1.0 : static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

double sensitivity(const ConfusionCounts& c) {
    const auto denom = c.tp + c.fn;
    return denom == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

morph::ComponentMap filter_small_lesions(const morph::ComponentMap& cm, double min_mm3) {
    morph::ComponentMap out;
    out.geom = cm.geom;
    std::vector<std::int32_t> remap(static_cast<std::size_t>(cm.count()) + 1, 0);
    for (int id = 1; id <= cm.count(); ++id) {
        const auto idx = static_cast<std::size_t>(id - 1);
        if (cm.volumes_mm3[idx] > min_mm3) {
            out.voxel_counts.push_back(cm.voxel_counts[idx]);
            out.volumes_mm3.push_back(cm.volumes_mm3[idx]);
            out.boxes.push_back(cm.boxes[idx]);
            remap[static_cast<std::size_t>(id)] = static_cast<std::int32_t>(out.voxel_counts.size());
        }
    }
    out.labels.resize(cm.labels.size());
    for (std::size_t n = 0; n < cm.labels.size(); ++n) {
        out.labels[n] = remap[static_cast<std::size_t>(cm.labels[n])];
    }
    return out;
}

LesionCounts lesion_counts(const morph::ComponentMap& gt, const morph::ComponentMap& pred) {
    require_same_grid(gt.geom, pred.geom, "reference vs prediction components");
    std::vector<char> gt_hit(static_cast<std::size_t>(gt.count()) + 1, 0);
    std::vector<char> pred_hit(static_cast<std::size_t>(pred.count()) + 1, 0);
    for (std::size_t n = 0; n < gt.labels.size(); ++n) {
        const auto g = gt.labels[n];
        const auto p = pred.labels[n];
        if (g != 0 && p != 0) {
            gt_hit[static_cast<std::size_t>(g)] = 1;
            pred_hit[static_cast<std::size_t>(p)] = 1;
        }
    }
    LesionCounts c;
    for (int id = 1; id <= gt.count(); ++id) {
        (gt_hit[static_cast<std::size_t>(id)] ? c.tp : c.fn) += 1;
    }
    for (int id = 1; id <= pred.count(); ++id) {
        if (!pred_hit[static_cast<std::size_t>(id)]) {
            ++c.fp;
        }
    }
    return c;
}

double lesional_dsc(const morph::ComponentMap& gt, const morph::ComponentMap& pred) {
    if (gt.count() == 0 && pred.count() == 0) {
        return 1.0;
    }
    if (gt.count() == 0 || pred.count() == 0) {
        return 0.0;
    }
    const LesionCounts c = lesion_counts(gt, pred);
    return 2.0 * c.tp / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

namespace {

LesionMask mask_of(const morph::ComponentMap& cm) {
    LesionMask out(cm.geom);
    for (std::size_t n = 0; n < cm.labels.size(); ++n) {
        out[n] = cm.labels[n] != 0 ? 1 : 0;
    }
    return out;
}

}  // namespace

CaseMetrics evaluate_case(const LesionMask& gt_raw, const LesionMask& pred_raw, const EvalOptions& opts) {
    require_same_grid(gt_raw.geometry(), pred_raw.geometry(), "reference vs prediction");
    const auto gt_cm = filter_small_lesions(morph::connected_components(gt_raw, opts.connectivity), opts.min_lesion_mm3);
    const auto pred_cm =
        filter_small_lesions(morph::connected_components(pred_raw, opts.connectivity), opts.min_lesion_mm3);
    const LesionMask gt = opts.filter_voxel_metrics ? mask_of(gt_cm) : gt_raw;
    const LesionMask pred = opts.filter_voxel_metrics ? mask_of(pred_cm) : pred_raw;
    const ConfusionCounts c = confusion(gt, pred);
    CaseMetrics m;
    const double voxel_mm3 = gt.geometry().voxel_volume_mm3();
    m.gt_volume_mm3 = static_cast<double>(c.tp + c.fn) * voxel_mm3;
    m.pred_volume_mm3 = static_cast<double>(c.tp + c.fp) * voxel_mm3;
    m.pred_empty = c.tp + c.fp == 0;
    const bool gt_empty = c.tp + c.fn == 0;

    if (m.pred_empty) {
        if (gt_empty) {
            m.dsc = 1.0;
            m.lesional_dsc = 1.0;
            m.ppv = 1.0;
        }
        m.fpr = 0.0;
        return m;
    }
    m.dsc = dsc(c);
    m.ppv = ppv(c);
    m.fpr = fpr(c);
    m.lesional_dsc = lesional_dsc(gt_cm, pred_cm);
    if (!gt_empty) {
        const SurfelSet sg = extract_surfels(gt);
        const SurfelSet sp = extract_surfels(pred);
        m.hd95_mm = hd95(sg, sp);
        m.assd_mm = assd(sg, sp);
    }
    return m;
}

}  // namespace lesionsynth::metrics
