#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lesionsynth/error.hpp"
#include "lesionsynth/nifti.hpp"
#include "lesionsynth/parallel.hpp"
#include "lesionsynth/pipeline.hpp"
#include "lesionsynth/version.hpp"
#include "pipeline_json.hpp"

namespace lesionsynth::pipeline {
namespace {

using json = nlohmann::ordered_json;

json real(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

double real_of(const json& v) {
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        return std::nan("");
    }
    return v.get<double>();
}

json acceptance_json(const synth::AcceptanceReport& r) {
    json pairs = json::array();
    for (const auto& pe : r.pairs) {
        pairs.push_back(json::array({pe.class_a, pe.class_b, real(pe.ef)}));
    }
    return {{"accepted", r.accepted},       {"lesion_class", r.lesion_class}, {"wm_class", r.wm_class},
            {"ef", real(r.lesion_wm_ef)},   {"threshold", real(r.threshold)}, {"percentile", r.percentile},
            {"pairs", pairs}};
}

synth::AcceptanceReport acceptance_of(const json& j) {
    synth::AcceptanceReport r;
    r.accepted = j.at("accepted").get<bool>();
    r.lesion_class = j.at("lesion_class").get<int>();
    r.wm_class = j.at("wm_class").get<int>();
    r.lesion_wm_ef = real_of(j.at("ef"));
    r.threshold = real_of(j.at("threshold"));
    r.percentile = j.at("percentile").get<double>();
    for (const auto& p : j.at("pairs")) {
        r.pairs.push_back({p[0].get<int>(), p[1].get<int>(), real_of(p[2])});
    }
    return r;
}

template <typename T>
std::vector<std::string> grid_mismatch(const Geometry& ref, const T& vol, const std::string& path) {
    if (!ref.same_grid(vol.geometry(), 1e-5)) {
        return {path + ": grid differs from image"};
    }
    return {};
}

}  // namespace

void write_manifest(const Manifest& man, const std::filesystem::path& path) {
    json augments = json::array();
    for (const auto& a : man.augments) {
        json lesions = json::array();
        for (const auto& l : a.lesions) {
            lesions.push_back({{"component", l.component_id},
                               {"volume_mm3", l.volume_mm3},
                               {"transform", l.transform.name()},
                               {"voxels_after", l.voxels_after}});
        }
        augments.push_back({{"n", a.n},
                            {"m", a.m},
                            {"flm_attempts", a.flm_attempts},
                            {"lesion_voxels", a.lesion_voxels},
                            {"lesions", lesions}});
    }
    json scans = json::array();
    for (const auto& s : man.scans) {
        json mean = json::array(), sd = json::array();
        for (double v : s.gmm.mean) mean.push_back(v);
        for (double v : s.gmm.stddev) sd.push_back(v);
        scans.push_back({{"n", s.n},
                         {"m", s.m},
                         {"p", s.p},
                         {"image", s.image},
                         {"gt", s.gt},
                         {"labels", s.labels},
                         {"attempts", s.attempts},
                         {"warp_draws", s.warp_draws},
                         {"acceptance", acceptance_json(s.report)},
                         {"gmm", {{"mean", mean}, {"stddev", sd}}}});
    }
    json records = json::array();
    for (const auto& r : man.records) {
        records.push_back({{"n", r.n},
                           {"m", r.m},
                           {"p", r.p},
                           {"l", r.l},
                           {"image", r.image},
                           {"prior", r.prior},
                           {"gt", r.gt},
                           {"prior_is_empty", r.prior_is_empty},
                           {"empty_substituted", r.empty_substituted},
                           {"retries", r.retries},
                           {"ef", real(r.ef)},
                           {"threshold", real(r.threshold)}});
    }
    const json j = {
        {"tool_version", kToolVersion},
        {"manifest_schema_version", kManifestSchemaVersion},
        {"created", man.created},
        {"config", config_json(man.config)},
        {"input_crc32", man.input_crc32},
        {"rng",
         {{"generator", "philox4x32-10"},
          {"master_seed", man.config.master_seed},
          {"paths",
           {{"aggressive_flm", "[0,n,m,attempt]"},
            {"scan", "[1,n,m,p]"},
            {"prior", "[2,n,m,p,l]"},
            {"empty_prior", "[3,n,m,p,l]"},
            {"shared_warp", "[4,n,m]"}}}}},
        {"record_count", man.records.size()},
        {"augments", augments},
        {"scans", scans},
        {"records", records},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << j.dump(1) << '\n';
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read manifest " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    Manifest man;
    try {
        const json j = json::parse(ss.str());
        if (j.at("manifest_schema_version").get<int>() != kManifestSchemaVersion) {
            throw ConfigError("unsupported manifest schema version");
        }
        man.config = config_from_json_value(j.at("config"), {});
        man.created = j.at("created").get<std::string>();
        man.input_crc32 = j.at("input_crc32").get<std::vector<std::uint32_t>>();
        for (const auto& a : j.at("augments")) {
            AugmentRecord r{a.at("n").get<int>(), a.at("m").get<int>(), a.at("flm_attempts").get<int>(),
                            a.at("lesion_voxels").get<std::size_t>(), {}};
            for (const auto& l : a.at("lesions")) {
                r.lesions.push_back({l.at("component").get<int>(), l.at("volume_mm3").get<double>(),
                                     flm::LesionTransform::parse(l.at("transform").get<std::string>()),
                                     l.at("voxels_after").get<std::size_t>()});
            }
            man.augments.push_back(std::move(r));
        }
        for (const auto& s : j.at("scans")) {
            ScanRecord r;
            r.n = s.at("n").get<int>();
            r.m = s.at("m").get<int>();
            r.p = s.at("p").get<int>();
            r.image = s.at("image").get<std::string>();
            r.gt = s.at("gt").get<std::string>();
            r.labels = s.at("labels").get<std::string>();
            r.attempts = s.at("attempts").get<int>();
            r.warp_draws = s.at("warp_draws").get<int>();
            r.report = acceptance_of(s.at("acceptance"));
            r.gmm.mean = s.at("gmm").at("mean").get<std::vector<double>>();
            r.gmm.stddev = s.at("gmm").at("stddev").get<std::vector<double>>();
            man.scans.push_back(std::move(r));
        }
        for (const auto& t : j.at("records")) {
            TripletRecord r;
            r.n = t.at("n").get<int>();
            r.m = t.at("m").get<int>();
            r.p = t.at("p").get<int>();
            r.l = t.at("l").get<int>();
            r.image = t.at("image").get<std::string>();
            r.prior = t.at("prior").get<std::string>();
            r.gt = t.at("gt").get<std::string>();
            r.prior_is_empty = t.at("prior_is_empty").get<bool>();
            r.empty_substituted = t.at("empty_substituted").get<bool>();
            r.retries = t.at("retries").get<int>();
            r.ef = real_of(t.at("ef"));
            r.threshold = real_of(t.at("threshold"));
            man.records.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw ConfigError("malformed manifest " + path.string() + ": " + e.what());
    }
    return man;
}

bool VerifyReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

VerifyReport verify_manifest(const std::filesystem::path& manifest_path, unsigned workers) {
    const Manifest man = read_manifest(manifest_path);
    const std::filesystem::path root = manifest_path.parent_path();
    const PipelineConfig& cfg = man.config;

    Check count{"record_count", true, {}};
    if (man.records.size() != man.expected_records()) {
        count.failures.push_back("expected " + std::to_string(man.expected_records()) + " records, found " +
                                 std::to_string(man.records.size()));
    }
    Check files{"files_present", true, {}};
    Check geometry{"geometry", true, {}};
    Check gt_labels{"gt_matches_labels", true, {}};
    Check clip{"intensity_clip", true, {}};
    Check accept{"acceptance", true, {}};
    Check forbidden{"forbidden_overlap", true, {}};
    Check empty_flag{"prior_empty_flag", true, {}};

    for (const auto& s : man.scans) {
        if (!s.report.accepted || !(s.report.lesion_wm_ef > s.report.threshold)) {
            accept.failures.push_back(s.image + ": recorded EF does not exceed threshold");
        }
    }

    std::mutex mu;
    parallel_for(man.scans.size(), workers, [&](std::size_t i) {
        const ScanRecord& s = man.scans[i];
        std::vector<std::string> f_files, f_geom, f_gt, f_clip, f_forb, f_flag;
        auto exists = [&](const std::string& rel) {
            if (!std::filesystem::exists(root / rel)) {
                f_files.push_back((root / rel).string());
                return false;
            }
            return true;
        };
        const bool have_img = exists(s.image);
        const bool have_gt = exists(s.gt);
        const bool have_lab = exists(s.labels);
        std::vector<const TripletRecord*> recs;
        const std::size_t L = static_cast<std::size_t>(cfg.L);
        for (std::size_t l = 0; l < L && i * L + l < man.records.size(); ++l) {
            recs.push_back(&man.records[i * L + l]);
        }
        if (have_img && have_gt && have_lab) {
            const ScalarVolume img = read_nifti_scalar(root / s.image);
            const LesionMask gt = read_nifti_mask(root / s.gt);
            const LabelVolume lab = read_nifti_labels(root / s.labels);
            auto add = [](std::vector<std::string>& dst, std::vector<std::string> src) {
                dst.insert(dst.end(), src.begin(), src.end());
            };
            add(f_geom, grid_mismatch(img.geometry(), gt, s.gt));
            add(f_geom, grid_mismatch(img.geometry(), lab, s.labels));
            for (double v : img.data()) {
                if (!(v <= cfg.synth.clip_max)) {
                    f_clip.push_back(s.image + ": intensity above clip_max");
                    break;
                }
            }
            if (f_geom.empty()) {
                for (std::size_t v = 0; v < gt.size(); ++v) {
                    if ((gt[v] != 0) != (lab[v] == cfg.lesion_class)) {
                        f_gt.push_back(s.gt + ": differs from lesion class of " + s.labels);
                        break;
                    }
                }
                for (std::size_t v = 0; v < gt.size(); ++v) {
                    if (gt[v] && cfg.forbidden_classes.contains(lab[v])) {
                        f_forb.push_back(s.gt + ": lesion voxel in forbidden class");
                        break;
                    }
                }
            }
            for (const TripletRecord* r : recs) {
                if (!exists(r->prior)) continue;
                const LesionMask prior = read_nifti_mask(root / r->prior);
                auto g = grid_mismatch(img.geometry(), prior, r->prior);
                if (!g.empty()) {
                    add(f_geom, g);
                    continue;
                }
                for (std::size_t v = 0; v < prior.size(); ++v) {
                    if (prior[v] && cfg.forbidden_classes.contains(lab[v])) {
                        f_forb.push_back(r->prior + ": lesion voxel in forbidden class");
                        break;
                    }
                }
                if ((count_foreground(prior) == 0) != r->prior_is_empty) {
                    f_flag.push_back(r->prior + ": prior_is_empty flag disagrees with file");
                }
            }
        } else {
            for (const TripletRecord* r : recs) exists(r->prior);
        }
        std::lock_guard lock(mu);
        files.failures.insert(files.failures.end(), f_files.begin(), f_files.end());
        geometry.failures.insert(geometry.failures.end(), f_geom.begin(), f_geom.end());
        gt_labels.failures.insert(gt_labels.failures.end(), f_gt.begin(), f_gt.end());
        clip.failures.insert(clip.failures.end(), f_clip.begin(), f_clip.end());
        forbidden.failures.insert(forbidden.failures.end(), f_forb.begin(), f_forb.end());
        empty_flag.failures.insert(empty_flag.failures.end(), f_flag.begin(), f_flag.end());
    });

    VerifyReport rep;
    for (Check* c : {&count, &files, &geometry, &gt_labels, &clip, &accept, &forbidden, &empty_flag}) {
        std::sort(c->failures.begin(), c->failures.end());
        c->passed = c->failures.empty();
        rep.checks.push_back(std::move(*c));
    }
    return rep;
}

}  // namespace lesionsynth::pipeline
