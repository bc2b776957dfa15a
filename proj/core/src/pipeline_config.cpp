#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lesionsynth/error.hpp"
#include "lesionsynth/pipeline.hpp"
#include "lesionsynth/version.hpp"
#include "pipeline_json.hpp"

namespace lesionsynth::pipeline {
namespace {

using json = nlohmann::ordered_json;

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            ok = ok || key == k;
        }
        if (!ok) {
            throw ConfigError("unknown config field '" + where + key + "'");
        }
    }
}

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) {
        throw ConfigError("missing config field '" + where + key + "'");
    }
    return j.at(key);
}

long long as_int(const json& v, const std::string& field) {
    if (!v.is_number_integer()) {
        throw ConfigError(field + ": expected an integer");
    }
    return v.get<long long>();
}

double as_real(const json& v, const std::string& field) {
    if (!v.is_number()) {
        throw ConfigError(field + ": expected a number");
    }
    return v.get<double>();
}

synth::Range as_range(const json& v, const std::string& field) {
    if (!v.is_array() || v.size() != 2) {
        throw ConfigError(field + ": expected [lo, hi]");
    }
    return {as_real(v[0], field), as_real(v[1], field)};
}

json range_json(const synth::Range& r) {
    return json::array({r.lo, r.hi});
}

flm::FlmConfig flm_from_json(const json& v, const std::string& field) {
    if (v.is_string()) {
        return flm::preset(v.get<std::string>());
    }
    if (!v.is_object()) {
        throw ConfigError(field + ": expected a preset name or an object");
    }
    reject_unknown(v, {"name", "bands"}, field + ".");
    flm::FlmConfig cfg;
    cfg.name = v.value("name", field);
    const json& bands = require(v, "bands", field + ".");
    if (!bands.is_array()) {
        throw ConfigError(field + ".bands: expected an array");
    }
    for (std::size_t b = 0; b < bands.size(); ++b) {
        const std::string bw = field + ".bands[" + std::to_string(b) + "].";
        const json& jb = bands[b];
        if (!jb.is_object()) {
            throw ConfigError(bw + ": expected an object");
        }
        reject_unknown(jb, {"min_mm3", "max_mm3", "max_inclusive", "transforms"}, bw);
        flm::VolumeBand band;
        band.min_mm3 = as_real(require(jb, "min_mm3", bw), bw + "min_mm3");
        const json& mx = require(jb, "max_mm3", bw);
        band.max_mm3 = mx.is_null() ? std::numeric_limits<double>::infinity() : as_real(mx, bw + "max_mm3");
        band.max_inclusive = jb.value("max_inclusive", false);
        const json& tr = require(jb, "transforms", bw);
        if (!tr.is_array()) {
            throw ConfigError(bw + "transforms: expected [[name, probability], ...]");
        }
        for (const json& t : tr) {
            if (!t.is_array() || t.size() != 2 || !t[0].is_string()) {
                throw ConfigError(bw + "transforms: expected [[name, probability], ...]");
            }
            band.dist.push_back({flm::LesionTransform::parse(t[0].get<std::string>()), as_real(t[1], bw + "transforms")});
        }
        cfg.bands.push_back(std::move(band));
    }
    cfg.validate();
    return cfg;
}

synth::GmmSynthConfig synth_from_json(const json& v) {
    synth::GmmSynthConfig c;
    if (!v.is_object()) {
        throw ConfigError("synth: expected an object");
    }
    reject_unknown(v,
                   {"rotation_deg", "scale", "shear", "svf_std", "mu_range", "sigma_range", "bias_std_range",
                    "bias_grid", "aniso_prob", "aniso_max_spacing_mm", "clip_max", "ef_percentile", "max_retries",
                    "svf_grid_divisor", "svf_min_grid", "svf_steps"},
                   "synth.");
    auto range = [&](const char* k, synth::Range& r) {
        if (v.contains(k)) r = as_range(v.at(k), std::string("synth.") + k);
    };
    auto real = [&](const char* k, double& r) {
        if (v.contains(k)) r = as_real(v.at(k), std::string("synth.") + k);
    };
    auto integer = [&](const char* k, int& r) {
        if (v.contains(k)) r = static_cast<int>(as_int(v.at(k), std::string("synth.") + k));
    };
    range("rotation_deg", c.spatial.rotation_deg);
    range("scale", c.spatial.scale);
    range("shear", c.spatial.shear);
    range("svf_std", c.spatial.svf_std);
    range("mu_range", c.mu_range);
    range("sigma_range", c.sigma_range);
    range("bias_std_range", c.bias_std_range);
    if (v.contains("bias_grid")) {
        const json& g = v.at("bias_grid");
        if (!g.is_array() || g.size() != 3) {
            throw ConfigError("synth.bias_grid: expected [x, y, z]");
        }
        for (std::size_t a = 0; a < 3; ++a) {
            c.bias_grid[a] = static_cast<int>(as_int(g[a], "synth.bias_grid"));
        }
    }
    real("aniso_prob", c.aniso_prob);
    real("aniso_max_spacing_mm", c.aniso_max_spacing_mm);
    real("clip_max", c.clip_max);
    real("ef_percentile", c.ef_percentile);
    integer("max_retries", c.max_retries);
    integer("svf_grid_divisor", c.svf_grid_divisor);
    integer("svf_min_grid", c.svf_min_grid);
    integer("svf_steps", c.svf_steps);
    c.validate();
    return c;
}

}  // namespace

json flm_to_json(const flm::FlmConfig& cfg) {
    json bands = json::array();
    for (const auto& b : cfg.bands) {
        json tr = json::array();
        for (const auto& wt : b.dist) {
            tr.push_back(json::array({wt.transform.name(), wt.probability}));
        }
        bands.push_back({{"min_mm3", b.min_mm3},
                         {"max_mm3", std::isinf(b.max_mm3) ? json(nullptr) : json(b.max_mm3)},
                         {"max_inclusive", b.max_inclusive},
                         {"transforms", tr}});
    }
    return {{"name", cfg.name}, {"bands", bands}};
}

json synth_to_json(const synth::GmmSynthConfig& c) {
    return {{"rotation_deg", range_json(c.spatial.rotation_deg)},
            {"scale", range_json(c.spatial.scale)},
            {"shear", range_json(c.spatial.shear)},
            {"svf_std", range_json(c.spatial.svf_std)},
            {"mu_range", range_json(c.mu_range)},
            {"sigma_range", range_json(c.sigma_range)},
            {"bias_std_range", range_json(c.bias_std_range)},
            {"bias_grid", json::array({c.bias_grid[0], c.bias_grid[1], c.bias_grid[2]})},
            {"aniso_prob", c.aniso_prob},
            {"aniso_max_spacing_mm", c.aniso_max_spacing_mm},
            {"clip_max", c.clip_max},
            {"ef_percentile", c.ef_percentile},
            {"max_retries", c.max_retries},
            {"svf_grid_divisor", c.svf_grid_divisor},
            {"svf_min_grid", c.svf_min_grid},
            {"svf_steps", c.svf_steps}};
}

json config_json(const PipelineConfig& cfg) {
    json inputs = json::array();
    for (const auto& in : cfg.inputs) {
        inputs.push_back({{"parcellation", in.parcellation.generic_string()}, {"lesions", in.lesions.generic_string()}});
    }
    return {{"schema_version", kConfigSchemaVersion},
            {"inputs", inputs},
            {"M", cfg.M},
            {"P", cfg.P},
            {"L", cfg.L},
            {"lesion_class", cfg.lesion_class},
            {"wm_class", cfg.wm_class},
            {"forbidden_classes", cfg.forbidden_classes},
            {"empty_prior_fraction", cfg.empty_prior_fraction},
            {"master_seed", cfg.master_seed},
            {"independent_warps", cfg.independent_warps},
            {"compress", cfg.compress},
            {"aggressive_flm", flm_to_json(cfg.aggressive)},
            {"realistic_flm", flm_to_json(cfg.realistic)},
            {"synth", synth_to_json(cfg.synth)}};
}

PipelineConfig config_from_json_value(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) {
        throw ConfigError("config: expected a JSON object");
    }
    reject_unknown(j,
                   {"schema_version", "inputs", "M", "P", "L", "lesion_class", "wm_class", "forbidden_classes",
                    "empty_prior_fraction", "master_seed", "independent_warps", "compress", "aggressive_flm",
                    "realistic_flm", "synth", "output_dir"},
                   "");
    if (j.contains("schema_version") && as_int(j.at("schema_version"), "schema_version") != kConfigSchemaVersion) {
        throw ConfigError("schema_version: unsupported (expected " + std::to_string(kConfigSchemaVersion) + ")");
    }
    PipelineConfig cfg;
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return (path.is_absolute() || base_dir.empty() ? path : base_dir / path).lexically_normal();
    };
    if (j.contains("inputs")) {
        const json& in = j.at("inputs");
        if (!in.is_array()) {
            throw ConfigError("inputs: expected an array");
        }
        for (std::size_t i = 0; i < in.size(); ++i) {
            const std::string w = "inputs[" + std::to_string(i) + "].";
            reject_unknown(in[i], {"parcellation", "lesions"}, w);
            const json& pp = require(in[i], "parcellation", w);
            const json& lp = require(in[i], "lesions", w);
            if (!pp.is_string() || !lp.is_string()) {
                throw ConfigError(w + ": paths must be strings");
            }
            cfg.inputs.push_back({resolve(pp.get<std::string>()), resolve(lp.get<std::string>())});
        }
    }
    if (j.contains("M")) cfg.M = static_cast<int>(as_int(j.at("M"), "M"));
    if (j.contains("P")) cfg.P = static_cast<int>(as_int(j.at("P"), "P"));
    if (j.contains("L")) cfg.L = static_cast<int>(as_int(j.at("L"), "L"));
    cfg.lesion_class = static_cast<int>(as_int(require(j, "lesion_class", ""), "lesion_class"));
    cfg.wm_class = static_cast<int>(as_int(require(j, "wm_class", ""), "wm_class"));
    if (j.contains("forbidden_classes")) {
        const json& f = j.at("forbidden_classes");
        if (!f.is_array()) {
            throw ConfigError("forbidden_classes: expected an array of class ids");
        }
        cfg.forbidden_classes.clear();
        for (const json& c : f) {
            cfg.forbidden_classes.insert(static_cast<int>(as_int(c, "forbidden_classes")));
        }
    }
    if (j.contains("empty_prior_fraction")) {
        cfg.empty_prior_fraction = as_real(j.at("empty_prior_fraction"), "empty_prior_fraction");
    }
    if (j.contains("master_seed")) {
        const json& s = j.at("master_seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
            throw ConfigError("master_seed: expected a non-negative integer");
        }
        cfg.master_seed = s.get<std::uint64_t>();
    }
    if (j.contains("independent_warps")) {
        if (!j.at("independent_warps").is_boolean()) throw ConfigError("independent_warps: expected a boolean");
        cfg.independent_warps = j.at("independent_warps").get<bool>();
    }
    if (j.contains("compress")) {
        if (!j.at("compress").is_boolean()) throw ConfigError("compress: expected a boolean");
        cfg.compress = j.at("compress").get<bool>();
    }
    if (j.contains("aggressive_flm")) cfg.aggressive = flm_from_json(j.at("aggressive_flm"), "aggressive_flm");
    if (j.contains("realistic_flm")) cfg.realistic = flm_from_json(j.at("realistic_flm"), "realistic_flm");
    if (j.contains("synth")) cfg.synth = synth_from_json(j.at("synth"));
    if (j.contains("output_dir")) {
        if (!j.at("output_dir").is_string()) throw ConfigError("output_dir: expected a string");
        cfg.output_dir = resolve(j.at("output_dir").get<std::string>());
    }
    cfg.validate();
    return cfg;
}

void PipelineConfig::validate() const {
    if (M < 1) throw ConfigError("M: must be >= 1");
    if (P < 1) throw ConfigError("P: must be >= 1");
    if (L < 1) throw ConfigError("L: must be >= 1");
    if (lesion_class < 0) throw ConfigError("lesion_class: must be a non-negative class id");
    if (wm_class < 0) throw ConfigError("wm_class: must be a non-negative class id");
    if (lesion_class == wm_class) throw ConfigError("wm_class: must differ from lesion_class");
    if (forbidden_classes.contains(lesion_class)) throw ConfigError("forbidden_classes: contains lesion_class");
    if (forbidden_classes.contains(wm_class)) throw ConfigError("forbidden_classes: contains wm_class");
    if (!(empty_prior_fraction >= 0.0 && empty_prior_fraction <= 1.0)) {
        throw ConfigError("empty_prior_fraction: must lie in [0,1]");
    }
    aggressive.validate();
    realistic.validate();
    synth.validate();
}

PipelineConfig config_from_json(const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json_value(j, base_dir);
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str(), path.parent_path());
}

std::string config_to_json(const PipelineConfig& cfg, int indent) {
    return config_json(cfg).dump(indent);
}

}  // namespace lesionsynth::pipeline
