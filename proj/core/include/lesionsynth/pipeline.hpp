#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lesionsynth/flm.hpp"
#include "lesionsynth/synthgen.hpp"
#include "lesionsynth/volume.hpp"

namespace lesionsynth::pipeline {

struct InputPaths {
    std::filesystem::path parcellation;
    std::filesystem::path lesions;
};

struct PipelineConfig {
    std::vector<InputPaths> inputs;  // only used by load_inputs
    int M = 15;
    int P = 25;
    int L = 5;
    flm::FlmConfig aggressive = flm::aggressive_preset();
    flm::FlmConfig realistic = flm::realistic_preset();
    synth::GmmSynthConfig synth;
    std::set<int> forbidden_classes{0};
    int lesion_class = -1;
    int wm_class = -1;
    double empty_prior_fraction = 0.2;
    std::uint64_t master_seed = 0;
    /// false: the P scans of one augmented mask share a single warp.
    bool independent_warps = true;
    bool compress = true;
    std::filesystem::path output_dir;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Parses a JSON config; relative input and output paths resolve against
/// `base_dir`. Unknown fields are rejected.
PipelineConfig config_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
/// Snapshot without output_dir; inputs as stored in the config.
std::string config_to_json(const PipelineConfig& cfg, int indent = 2);

struct InputPair {
    LabelVolume parcellation;
    LesionMask lesions;
};

std::vector<InputPair> load_inputs(const PipelineConfig& cfg);

struct TripletRecord {
    int n = 0, m = 0, p = 0, l = 0;
    std::string image;  // paths relative to the dataset root
    std::string prior;
    std::string gt;
    bool prior_is_empty = false;     // M_b has no foreground
    bool empty_substituted = false;  // replaced by the empty-prior draw
    int retries = 0;                 // scan attempts beyond the first
    double ef = 0.0;
    double threshold = 0.0;
};

struct ScanRecord {
    int n = 0, m = 0, p = 0;
    std::string image, gt, labels;
    int attempts = 0;
    int warp_draws = 0;
    synth::AcceptanceReport report;
    synth::GmmParams gmm;
};

struct AugmentRecord {
    int n = 0, m = 0;
    int flm_attempts = 0;
    std::size_t lesion_voxels = 0;
    std::vector<flm::LesionOutcome> lesions;
};

struct Manifest {
    PipelineConfig config;
    std::vector<std::uint32_t> input_crc32;
    std::string created;  // UTC timestamp; the only run-dependent field
    std::vector<AugmentRecord> augments;
    std::vector<ScanRecord> scans;
    std::vector<TripletRecord> records;

    std::size_t expected_records() const {
        return input_crc32.size() * static_cast<std::size_t>(config.M) * static_cast<std::size_t>(config.P) *
               static_cast<std::size_t>(config.L);
    }
};

inline constexpr const char* kManifestName = "manifest.json";

struct RunOptions {
    unsigned workers = 0;  // 0 = default
};

/// Generates N*M*P*L triplets under cfg.output_dir and writes the manifest
/// there. Output bytes do not depend on the worker count.
Manifest generate_dataset(const std::vector<InputPair>& inputs, const PipelineConfig& cfg,
                          const RunOptions& opts = {});

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

struct Check {
    std::string name;
    bool passed = true;
    std::vector<std::string> failures;
};

struct VerifyReport {
    std::vector<Check> checks;
    bool ok() const;
};

/// Record count, file presence, shared geometry, gt == (labels ==
/// lesion_class), intensities <= clip_max, recorded EF above threshold,
/// no lesion voxels in forbidden classes, prior_is_empty consistency.
VerifyReport verify_manifest(const std::filesystem::path& manifest_path, unsigned workers = 0);

}  // namespace lesionsynth::pipeline
