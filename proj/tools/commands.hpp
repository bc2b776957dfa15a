#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lesionsynth::cli {

enum class Verbosity { quiet, normal, debug };

struct Globals {
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned workers = 0;
    Verbosity verbosity = Verbosity::normal;
};

void info(const Globals& g, const std::string& msg);
void debug(const Globals& g, const std::string& msg);

struct SynthArgs {
    std::filesystem::path config;
    std::filesystem::path out;
    bool verify = false;
};
int cmd_synth(const Globals& g, const SynthArgs& a);

int cmd_verify(const Globals& g, const std::filesystem::path& manifest);

struct FlmArgs {
    std::filesystem::path mask;
    std::filesystem::path parc;
    std::string preset = "realistic";
    int replicas = 1;
    std::vector<int> forbidden{0};
    std::filesystem::path out;
};
int cmd_flm(const Globals& g, const FlmArgs& a);

struct EvalArgs {
    std::filesystem::path gt;
    std::filesystem::path pred;
    std::filesystem::path out;
    std::string dataset;
    double min_lesion_mm3 = 3.0;
    bool filter_voxel_metrics = false;
};
int cmd_eval(const Globals& g, const EvalArgs& a);

struct ReportArgs {
    std::vector<std::filesystem::path> metrics;
    std::vector<std::string> names;
    std::vector<std::string> group_by{"dataset"};
    std::filesystem::path out;
};
int cmd_report(const Globals& g, const ReportArgs& a);

struct InferPrepArgs {
    std::filesystem::path in;
    std::optional<std::filesystem::path> prior;
    std::filesystem::path out;
    std::string predictor;
    bool tta = false;
    std::vector<int> patch{128, 128, 96};
    double step = 0.5;
    double threshold = 0.5;
};
int cmd_infer_prep(const Globals& g, const InferPrepArgs& a);

struct PhantomArgs {
    std::filesystem::path out;
    std::vector<int> dims{32, 32, 32};
    std::vector<double> spacing{1.0, 1.0, 1.0};
    int lesions = 6;
    int count = 1;
};
int cmd_phantom(const Globals& g, const PhantomArgs& a);

}  // namespace lesionsynth::cli
