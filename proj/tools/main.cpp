#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "lesionsynth/error.hpp"
#include "lesionsynth/flm.hpp"
#include "lesionsynth/version.hpp"

using namespace lesionsynth;
using namespace lesionsynth::cli;

namespace {

int fail(int code, const std::string& msg) {
    std::string line = msg;
    std::replace(line.begin(), line.end(), '\n', ' ');
    std::cerr << "error: " << line << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic longitudinal lesion dataset generation and segmentation evaluation"};
    app.name("lesionsynth");
    app.require_subcommand(1);
    app.set_version_flag("--version",
                         std::string("lesionsynth ") + kToolVersion + " (config schema " +
                             std::to_string(kConfigSchemaVersion) + ", manifest schema " +
                             std::to_string(kManifestSchemaVersion) + ")");

    Globals g;
    auto* seed_opt = app.add_option("--seed", g.seed, "Master seed")->envname("LESIONSYNTH_SEED");
    app.add_option("--workers", g.workers, "Worker threads (default: all cores)")
        ->envname("LESIONSYNTH_WORKERS")
        ->check(CLI::PositiveNumber);
    bool quiet = false;
    bool dbg = false;
    app.add_flag("-q,--quiet", quiet, "Only report errors");
    app.add_flag("--debug", dbg, "Extra diagnostics on stderr");

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic training dataset");
    c_synth->add_option("--config", synth.config, "Pipeline JSON config")->required()->check(CLI::ExistingFile);
    c_synth->add_option("--out", synth.out, "Output directory (overrides output_dir)");
    c_synth->add_flag("--verify", synth.verify, "Verify the manifest after generation");

    std::filesystem::path manifest;
    auto* c_verify = app.add_subcommand("verify", "Check a generated dataset against its manifest");
    c_verify->add_option("--manifest", manifest, "manifest.json")->required()->check(CLI::ExistingFile);

    FlmArgs flm_args;
    auto* c_flm = app.add_subcommand("flm", "Apply the fake-lesion-mask module to a mask");
    c_flm->add_option("--mask", flm_args.mask)->required()->check(CLI::ExistingFile);
    c_flm->add_option("--parc", flm_args.parc)->required()->check(CLI::ExistingFile);
    c_flm->add_option("--preset", flm_args.preset, "Preset name")->capture_default_str();
    c_flm->add_option("-n,--n", flm_args.replicas, "Replicas")->capture_default_str();
    c_flm->add_option("--forbidden", flm_args.forbidden, "Forbidden class ids")->capture_default_str()->delimiter(',');
    c_flm->add_option("--out", flm_args.out)->required();

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "Per-case segmentation metrics");
    c_eval->add_option("--gt", eval.gt, "Reference mask directory")->required();
    c_eval->add_option("--pred", eval.pred, "Prediction mask directory")->required();
    c_eval->add_option("--out", eval.out, "Output CSV")->required();
    c_eval->add_option("--dataset", eval.dataset, "Value for a dataset column");
    c_eval->add_option("--min-lesion-mm3", eval.min_lesion_mm3)->capture_default_str();
    c_eval->add_flag("--filter-voxel-metrics", eval.filter_voxel_metrics,
                     "Apply the small-lesion filter to voxel and distance metrics too");

    ReportArgs report;
    auto* c_report = app.add_subcommand("report", "Medians, pairwise tests and Bland-Altman tables");
    c_report->add_option("--metrics", report.metrics, "Per-case CSVs, one per method")
        ->required()
        ->check(CLI::ExistingFile);
    c_report->add_option("--names", report.names, "Method names (default: file stems)")->delimiter(',');
    c_report->add_option("--group-by", report.group_by)->capture_default_str()->delimiter(',');
    c_report->add_option("--out", report.out)->required();

    InferPrepArgs prep;
    auto* c_prep = app.add_subcommand("infer-prep", "Preprocess a scan into the two-channel input");
    c_prep->add_option("--in", prep.in)->required()->check(CLI::ExistingFile);
    c_prep->add_option("--prior", prep.prior)->check(CLI::ExistingFile);
    c_prep->add_option("--out", prep.out)->required();
    c_prep->add_option("--predictor", prep.predictor, "constant:<c> | copy-prior | threshold:<t>");
    c_prep->add_flag("--tta", prep.tta, "Mirror test-time augmentation");
    c_prep->add_option("--patch", prep.patch)->expected(3)->capture_default_str()->delimiter(',');
    c_prep->add_option("--step", prep.step)->capture_default_str();
    c_prep->add_option("--threshold", prep.threshold)->capture_default_str();

    PhantomArgs ph;
    auto* c_phantom = app.add_subcommand("phantom", "Write synthetic parcellation/lesion phantoms");
    c_phantom->add_option("--out", ph.out)->required();
    c_phantom->add_option("--dims", ph.dims)->expected(3)->capture_default_str()->delimiter(',');
    c_phantom->add_option("--spacing", ph.spacing)->expected(3)->capture_default_str()->delimiter(',');
    c_phantom->add_option("--lesions", ph.lesions)->capture_default_str();
    c_phantom->add_option("--count", ph.count)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(2, e.what());
    }
    g.seed_given = seed_opt->count() > 0 || std::getenv("LESIONSYNTH_SEED") != nullptr;
    g.verbosity = quiet ? Verbosity::quiet : (dbg ? Verbosity::debug : Verbosity::normal);

    try {
        if (c_synth->parsed()) return cmd_synth(g, synth);
        if (c_verify->parsed()) return cmd_verify(g, manifest);
        if (c_flm->parsed()) return cmd_flm(g, flm_args);
        if (c_eval->parsed()) return cmd_eval(g, eval);
        if (c_report->parsed()) return cmd_report(g, report);
        if (c_prep->parsed()) return cmd_infer_prep(g, prep);
        if (c_phantom->parsed()) return cmd_phantom(g, ph);
    } catch (const ConfigError& e) {
        return fail(2, e.what());
    } catch (const std::exception& e) {
        return fail(1, e.what());
    }
    return fail(2, "no subcommand");
}
