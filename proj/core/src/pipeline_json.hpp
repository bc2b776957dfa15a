#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "lesionsynth/pipeline.hpp"

namespace lesionsynth::pipeline {

nlohmann::ordered_json flm_to_json(const flm::FlmConfig& cfg);
nlohmann::ordered_json synth_to_json(const synth::GmmSynthConfig& cfg);
nlohmann::ordered_json config_json(const PipelineConfig& cfg);
PipelineConfig config_from_json_value(const nlohmann::ordered_json& j, const std::filesystem::path& base_dir);

}  // namespace lesionsynth::pipeline
