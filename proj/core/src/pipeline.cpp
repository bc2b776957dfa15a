#include "lesionsynth/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include <zlib.h>

#include "lesionsynth/error.hpp"
#include "lesionsynth/nifti.hpp"
#include "lesionsynth/parallel.hpp"
#include "lesionsynth/rng.hpp"

namespace lesionsynth::pipeline {
namespace {

// First path element of every RNG stream, by stage.
enum Stage : std::uint64_t {
    kAggressiveFlm = 0,  // {0, n, m, attempt}
    kScan = 1,           // {1, n, m, p}
    kPrior = 2,          // {2, n, m, p, l}
    kEmptyPrior = 3,     // {3, n, m, p, l}
    kSharedWarp = 4,     // {4, n, m}
};

constexpr std::size_t kMinLesionVoxels = 2;

std::string scan_dir(int n, int m, int p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "sub-%03d/aug-%03d/scan-%03d", n, m, p);
    return buf;
}

std::string prior_name(int l, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "prior-%02d%s", l, ext);
    return buf;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

template <typename T>
std::uint32_t crc_of(const Grid<T>& g) {
    const auto bytes = g.data();
    uLong crc = crc32(0L, Z_NULL, 0);
    const auto* ptr = reinterpret_cast<const Bytef*>(bytes.data());
    std::size_t left = bytes.size_bytes();
    while (left > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
        crc = crc32(crc, ptr, chunk);
        ptr += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

struct Prepared {
    LabelVolume parc;  // lesion-class voxels outside the mask reverted to WM
    LesionMask lesions;
};

Prepared prepare_input(const InputPair& in, const PipelineConfig& cfg, int n) {
    const std::string where = "input " + std::to_string(n) + ": ";
    if (!in.parcellation.geometry().same_grid(in.lesions.geometry())) {
        throw GeometryError(where + "parcellation and lesion mask grids differ");
    }
    const LabelVolume& parc = in.parcellation;
    if (cfg.wm_class >= parc.num_classes()) {
        throw ConfigError(where + "wm_class outside the parcellation's label range");
    }
    bool has_wm = false;
    for (auto v : parc.data()) {
        has_wm = has_wm || v == cfg.wm_class;
    }
    if (!has_wm) {
        throw ConfigError(where + "parcellation contains no wm_class voxels");
    }
    if (count_foreground(in.lesions) == 0) {
        throw ConfigError(where + "lesion mask is empty");
    }
    const int k = std::max(parc.num_classes(), cfg.lesion_class + 1);
    std::vector<std::int32_t> labels(parc.values());
    for (std::size_t v = 0; v < labels.size(); ++v) {
        if (labels[v] == cfg.lesion_class && !in.lesions[v]) {
            labels[v] = cfg.wm_class;
        }
    }
    std::vector<std::string> names = parc.class_names();
    for (int c = parc.num_classes(); c < k; ++c) {
        names.push_back(std::to_string(c));
    }
    LesionMask mask(in.lesions.geometry(), 0);
    for (std::size_t v = 0; v < mask.size(); ++v) {
        mask[v] = in.lesions[v] ? 1 : 0;
    }
    return {LabelVolume(parc.geometry(), std::move(labels), std::move(names)), std::move(mask)};
}

struct Augment {
    AugmentRecord record;
    std::vector<std::uint32_t> lesion_voxels;
};

Augment run_aggressive_flm(const Prepared& in, const PipelineConfig& cfg, const RngStream& root, int n, int m) {
    Augment out;
    out.record.n = n;
    out.record.m = m;
    for (int attempt = 0; attempt < cfg.synth.max_retries; ++attempt) {
        const RngStream rng = root.child({kAggressiveFlm, std::uint64_t(n), std::uint64_t(m), std::uint64_t(attempt)});
        flm::PriorResult res = flm::simulate_prior_detailed(in.lesions, cfg.aggressive, rng);
        const LesionMask clamped = flm::clamp_to_plausible(res.mask, in.parc, cfg.forbidden_classes);
        if (count_foreground(clamped) < kMinLesionVoxels) {
            continue;
        }
        out.record.flm_attempts = attempt + 1;
        out.record.lesions = std::move(res.lesions);
        for (std::size_t v = 0; v < clamped.size(); ++v) {
            if (clamped[v]) {
                out.lesion_voxels.push_back(static_cast<std::uint32_t>(v));
            }
        }
        out.record.lesion_voxels = out.lesion_voxels.size();
        return out;
    }
    throw Error("aggressive FLM left fewer than 2 lesion voxels in every attempt");
}

LabelVolume merged_labels(const Prepared& in, const Augment& aug, int lesion_class) {
    LabelVolume merged = in.parc;
    for (std::uint32_t v : aug.lesion_voxels) {
        merged[v] = lesion_class;
    }
    return merged;
}

[[noreturn]] void rethrow_at(const std::string& where) {
    try {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const GeometryError& e) {
        throw GeometryError(where + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(where + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(where + ": " + e.what());
    }
}

}  // namespace

Manifest generate_dataset(const std::vector<InputPair>& inputs, const PipelineConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    if (inputs.empty()) {
        throw ConfigError("inputs: at least one input pair required");
    }
    if (cfg.output_dir.empty()) {
        throw ConfigError("output_dir: not set");
    }
    const int N = static_cast<int>(inputs.size());
    const RngStream root(cfg.master_seed);
    const char* ext = cfg.compress ? ".nii.gz" : ".nii";

    Manifest man;
    man.config = cfg;
    man.config.output_dir.clear();
    man.created = utc_now();

    std::vector<Prepared> prepared;
    for (int n = 0; n < N; ++n) {
        prepared.push_back(prepare_input(inputs[static_cast<std::size_t>(n)], cfg, n));
        man.input_crc32.push_back(crc_of(inputs[static_cast<std::size_t>(n)].parcellation) ^
                                  crc_of(inputs[static_cast<std::size_t>(n)].lesions));
    }

    const std::size_t n_aug = static_cast<std::size_t>(N) * static_cast<std::size_t>(cfg.M);
    std::vector<Augment> augments(n_aug);
    parallel_for(n_aug, opts.workers, [&](std::size_t job) {
        const int n = static_cast<int>(job / static_cast<std::size_t>(cfg.M));
        const int m = static_cast<int>(job % static_cast<std::size_t>(cfg.M));
        try {
            augments[job] = run_aggressive_flm(prepared[static_cast<std::size_t>(n)], cfg, root, n, m);
        } catch (...) {
            rethrow_at("(n=" + std::to_string(n) + ", m=" + std::to_string(m) + ")");
        }
    });

    const std::size_t n_scans = n_aug * static_cast<std::size_t>(cfg.P);
    const std::size_t L = static_cast<std::size_t>(cfg.L);
    man.scans.resize(n_scans);
    man.records.resize(n_scans * L);
    std::filesystem::create_directories(cfg.output_dir);

    parallel_for(n_scans, opts.workers, [&](std::size_t job) {
        const std::size_t aug_idx = job / static_cast<std::size_t>(cfg.P);
        const int n = static_cast<int>(aug_idx / static_cast<std::size_t>(cfg.M));
        const int m = static_cast<int>(aug_idx % static_cast<std::size_t>(cfg.M));
        const int p = static_cast<int>(job % static_cast<std::size_t>(cfg.P));
        const auto un = std::uint64_t(n), um = std::uint64_t(m), up = std::uint64_t(p);
        try {
            const Prepared& in = prepared[static_cast<std::size_t>(n)];
            const LabelVolume merged = merged_labels(in, augments[aug_idx], cfg.lesion_class);
            std::optional<synth::WarpSample> shared;
            if (!cfg.independent_warps) {
                RngStream wr = root.child({kSharedWarp, un, um});
                shared = synth::sample_warp(merged, cfg.synth, wr);
            }
            const synth::SynthScan scan = synth::synthesize_scan(merged, cfg.synth, cfg.lesion_class, cfg.wm_class,
                                                                 root.child({kScan, un, um, up}),
                                                                 shared ? &*shared : nullptr);
            const std::string dir = scan_dir(n, m, p);
            const std::filesystem::path abs = cfg.output_dir / dir;
            std::filesystem::create_directories(abs);
            ScanRecord& sr = man.scans[job];
            sr = {n, m, p, dir + "/image" + ext, dir + "/gt" + ext, dir + "/labels" + ext,
                  scan.attempts, scan.warp_draws, scan.report, scan.gmm};
            write_nifti(scan.image, cfg.output_dir / sr.image);
            write_nifti(scan.lesion_mask, cfg.output_dir / sr.gt);
            write_nifti(scan.labels, cfg.output_dir / sr.labels);

            for (int l = 0; l < cfg.L; ++l) {
                const auto ul = std::uint64_t(l);
                LesionMask prior = flm::clamp_to_plausible(
                    flm::simulate_prior(scan.lesion_mask, cfg.realistic, root.child({kPrior, un, um, up, ul})),
                    scan.labels, cfg.forbidden_classes);
                RngStream er = root.child({kEmptyPrior, un, um, up, ul});
                const bool substituted = er.uniform() < cfg.empty_prior_fraction;
                if (substituted) {
                    prior = LesionMask(prior.geometry(), 0);
                }
                TripletRecord& r = man.records[job * L + static_cast<std::size_t>(l)];
                r = {n, m, p, l, sr.image, dir + "/" + prior_name(l, ext), sr.gt, count_foreground(prior) == 0,
                     substituted, scan.attempts - 1, scan.report.lesion_wm_ef, scan.report.threshold};
                write_nifti(prior, cfg.output_dir / r.prior);
            }
        } catch (...) {
            rethrow_at("(n=" + std::to_string(n) + ", m=" + std::to_string(m) + ", p=" + std::to_string(p) + ")");
        }
    });

    for (auto& a : augments) {
        man.augments.push_back(std::move(a.record));
    }
    write_manifest(man, cfg.output_dir / kManifestName);
    return man;
}

std::vector<InputPair> load_inputs(const PipelineConfig& cfg) {
    if (cfg.inputs.empty()) {
        throw ConfigError("inputs: at least one input pair required");
    }
    std::vector<InputPair> out;
    for (const auto& in : cfg.inputs) {
        out.push_back({read_nifti_labels(in.parcellation), read_nifti_mask(in.lesions)});
    }
    return out;
}

}  // namespace lesionsynth::pipeline
