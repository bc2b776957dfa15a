#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>

#include "lesionsynth/csv.hpp"
#include "lesionsynth/error.hpp"
#include "lesionsynth/flm.hpp"
#include "lesionsynth/infer.hpp"
#include "lesionsynth/metrics.hpp"
#include "lesionsynth/nifti.hpp"
#include "lesionsynth/parallel.hpp"
#include "lesionsynth/phantom.hpp"
#include "lesionsynth/pipeline.hpp"
#include "lesionsynth/rng.hpp"
#include "lesionsynth/stats.hpp"

namespace lesionsynth::cli {
namespace fs = std::filesystem;

void info(const Globals& g, const std::string& msg) {
    if (g.verbosity != Verbosity::quiet) {
        std::cout << msg << '\n';
    }
}

void debug(const Globals& g, const std::string& msg) {
    if (g.verbosity == Verbosity::debug) {
        std::cerr << "debug: " << msg << '\n';
    }
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// "case.nii.gz" -> "case"; non-NIfTI names -> nullopt.
std::optional<std::string> nifti_stem(const fs::path& p) {
    const std::string name = p.filename().string();
    for (const std::string ext : {".nii.gz", ".nii"}) {
        if (name.size() > ext.size() && name.ends_with(ext)) {
            return name.substr(0, name.size() - ext.size());
        }
    }
    return std::nullopt;
}

std::map<std::string, fs::path> list_nifti(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw ConfigError("not a directory: " + dir.string());
    }
    std::map<std::string, fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        if (const auto stem = nifti_stem(e.path())) {
            if (!out.emplace(*stem, e.path()).second) {
                throw ConfigError("duplicate case id '" + *stem + "' in " + dir.string());
            }
        }
    }
    return out;
}

}  // namespace

int cmd_synth(const Globals& g, const SynthArgs& a) {
    pipeline::PipelineConfig cfg = pipeline::load_config(a.config);
    if (g.seed_given) {
        cfg.master_seed = g.seed;
    }
    if (!a.out.empty()) {
        cfg.output_dir = a.out;
    }
    if (cfg.output_dir.empty()) {
        throw ConfigError("output directory not given (--out or output_dir)");
    }
    const auto inputs = pipeline::load_inputs(cfg);
    debug(g, "loaded " + std::to_string(inputs.size()) + " input pairs");
    const auto t0 = std::chrono::steady_clock::now();
    const auto man = pipeline::generate_dataset(inputs, cfg, {g.workers});
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.1f", seconds_since(t0));
    info(g, "wrote " + std::to_string(man.records.size()) + " triplets to " + cfg.output_dir.string() + " in " + buf + " s");
    if (a.verify) {
        return cmd_verify(g, cfg.output_dir / pipeline::kManifestName);
    }
    return 0;
}

int cmd_verify(const Globals& g, const fs::path& manifest) {
    const auto rep = pipeline::verify_manifest(manifest, g.workers);
    for (const auto& c : rep.checks) {
        info(g, std::string(c.passed ? "PASS " : "FAIL ") + c.name);
        for (const auto& f : c.failures) {
            info(g, "  " + f);
        }
    }
    if (!rep.ok()) {
        std::cerr << "error: manifest verification failed\n";
        return 1;
    }
    return 0;
}

int cmd_flm(const Globals& g, const FlmArgs& a) {
    const flm::FlmConfig cfg = flm::preset(a.preset);
    if (a.replicas < 1) {
        throw ConfigError("--n: must be >= 1");
    }
    const LesionMask mask = read_nifti_mask(a.mask);
    const LabelVolume parc = read_nifti_labels(a.parc);
    require_same_grid(mask.geometry(), parc.geometry(), "mask vs parcellation");
    const std::set<int> forbidden(a.forbidden.begin(), a.forbidden.end());
    fs::create_directories(a.out);
    parallel_for(static_cast<std::size_t>(a.replicas), g.workers, [&](std::size_t r) {
        const RngStream rng(g.seed, {static_cast<std::uint64_t>(r)});
        const LesionMask out = flm::clamp_to_plausible(flm::simulate_prior(mask, cfg, rng), parc, forbidden);
        char name[32];
        std::snprintf(name, sizeof name, "flm-%03zu.nii.gz", r);
        write_nifti(out, a.out / name);
    });
    info(g, "wrote " + std::to_string(a.replicas) + " masks to " + a.out.string());
    return 0;
}

int cmd_eval(const Globals& g, const EvalArgs& a) {
    const auto gt = list_nifti(a.gt);
    const auto pred = list_nifti(a.pred);
    std::vector<std::string> orphans;
    std::vector<std::string> ids;
    for (const auto& [id, _] : gt) {
        (pred.contains(id) ? ids : orphans).push_back(id);
    }
    for (const auto& [id, _] : pred) {
        if (!gt.contains(id)) orphans.push_back(id);
    }
    if (!orphans.empty()) {
        std::sort(orphans.begin(), orphans.end());
        std::string list;
        for (const auto& o : orphans) list += (list.empty() ? "" : ", ") + o;
        throw ConfigError("unmatched cases: " + list);
    }
    if (ids.empty()) {
        throw ConfigError("no NIfTI cases found in " + a.gt.string());
    }
    metrics::EvalOptions opts;
    opts.min_lesion_mm3 = a.min_lesion_mm3;
    opts.filter_voxel_metrics = a.filter_voxel_metrics;
    std::vector<metrics::CaseMetrics> results(ids.size());
    parallel_for(ids.size(), g.workers, [&](std::size_t i) {
        try {
            results[i] = metrics::evaluate_case(read_nifti_mask(gt.at(ids[i])), read_nifti_mask(pred.at(ids[i])), opts);
        } catch (const std::exception& e) {
            throw Error("case " + ids[i] + ": " + e.what());
        }
    });
    csv::Table t;
    t.header = {"case_id"};
    if (!a.dataset.empty()) t.header.push_back("dataset");
    for (const char* c : {"dsc", "lesional_dsc", "ppv", "fpr", "hd95_mm", "assd_mm", "pred_empty", "gt_volume_mm3",
                          "pred_volume_mm3"}) {
        t.header.push_back(c);
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& m = results[i];
        std::vector<std::string> row{ids[i]};
        if (!a.dataset.empty()) row.push_back(a.dataset);
        for (const auto& cell : {csv::format(m.dsc), csv::format(m.lesional_dsc), csv::format(m.ppv), csv::format(m.fpr),
                                 csv::format(m.hd95_mm), csv::format(m.assd_mm),
                                 std::string(m.pred_empty ? "1" : "0"), csv::format(m.gt_volume_mm3),
                                 csv::format(m.pred_volume_mm3)}) {
            row.push_back(cell);
        }
        t.rows.push_back(std::move(row));
    }
    if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
    csv::write(a.out, t);
    info(g, "evaluated " + std::to_string(ids.size()) + " cases -> " + a.out.string());
    return 0;
}

int cmd_report(const Globals& g, const ReportArgs& a) {
    if (!a.names.empty() && a.names.size() != a.metrics.size()) {
        throw ConfigError("--names: expected one name per metrics file");
    }
    std::vector<stats::CaseTable> tables;
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
        std::string name = a.names.empty() ? a.metrics[i].filename().string() : a.names[i];
        if (a.names.empty() && name.ends_with(".csv")) name.resize(name.size() - 4);
        tables.push_back(stats::read_case_table(a.metrics[i], name));
    }
    stats::ReportOptions opts;
    opts.group_by = a.group_by;
    const auto rep = stats::aggregate_report(tables, opts);
    stats::write_report(rep, a.out);
    info(g, "report: " + std::to_string(rep.medians.size()) + " summaries, " + std::to_string(rep.comparisons.size()) +
                " comparisons -> " + a.out.string());
    return 0;
}

int cmd_infer_prep(const Globals& g, const InferPrepArgs& a) {
    const ScalarVolume img = infer::preprocess(read_nifti_scalar(a.in));
    std::optional<LesionMask> prior;
    if (a.prior) {
        prior = reorient_ras(read_nifti_mask(*a.prior));
    }
    const infer::TwoChannelInput in = infer::pack_input(img, prior);
    fs::create_directories(a.out);
    write_nifti(in.image, a.out / "image.nii.gz");
    write_nifti(in.prior, a.out / "prior.nii.gz");
    debug(g, "preprocessed grid " + std::to_string(img.dims()[0]) + "x" + std::to_string(img.dims()[1]) + "x" +
                 std::to_string(img.dims()[2]));
    if (!a.predictor.empty()) {
        if (a.patch.size() != 3) {
            throw ConfigError("--patch: expected three sizes");
        }
        auto pred = infer::make_predictor(a.predictor, {a.patch[0], a.patch[1], a.patch[2]});
        if (a.tta) pred = infer::mirror_tta(pred);
        const ScalarVolume prob = infer::sliding_window_predict(in, *pred, {a.step, g.workers});
        write_nifti(prob, a.out / "prob.nii.gz");
        write_nifti(infer::binarize(prob, a.threshold), a.out / "mask.nii.gz");
    }
    info(g, "wrote two-channel input to " + a.out.string());
    return 0;
}

int cmd_phantom(const Globals& g, const PhantomArgs& a) {
    if (a.dims.size() != 3 || a.spacing.size() != 3) {
        throw ConfigError("--dims/--spacing: expected three values");
    }
    if (a.count < 1) {
        throw ConfigError("--count: must be >= 1");
    }
    for (int i = 0; i < a.count; ++i) {
        phantom::Options o;
        o.dims = {a.dims[0], a.dims[1], a.dims[2]};
        o.spacing = {a.spacing[0], a.spacing[1], a.spacing[2]};
        o.lesions = a.lesions;
        o.seed = g.seed + static_cast<std::uint64_t>(i);
        const auto ph = phantom::make(o);
        char sub[32];
        std::snprintf(sub, sizeof sub, "sub-%03d", i);
        const fs::path dir = a.out / sub;
        fs::create_directories(dir);
        write_nifti(ph.parcellation, dir / "parcellation.nii.gz");
        write_nifti(ph.lesions, dir / "lesions.nii.gz");
        write_nifti(ph.image, dir / "image.nii.gz");
    }
    info(g, "wrote " + std::to_string(a.count) + " phantoms to " + a.out.string());
    return 0;
}

}  // namespace lesionsynth::cli
