#include <doctest.h>

#include <fstream>
#include <sstream>

#include "lesionsynth/error.hpp"
#include "lesionsynth/nifti.hpp"
#include "lesionsynth/phantom.hpp"
#include "lesionsynth/pipeline.hpp"
#include "test_support.hpp"

using namespace lesionsynth;
using namespace lesionsynth::pipeline;
namespace fs = std::filesystem;

namespace {

std::vector<InputPair> phantoms(int count, int size = 20) {
    std::vector<InputPair> out;
    for (int i = 0; i < count; ++i) {
        const auto ph = phantom::make({.dims = {size, size, size}, .lesions = 4, .seed = static_cast<std::uint64_t>(i)});
        out.push_back({ph.parcellation, ph.lesions});
    }
    return out;
}

PipelineConfig small_config(const fs::path& out, int m, int p, int l) {
    PipelineConfig c;
    c.M = m;
    c.P = p;
    c.L = l;
    c.lesion_class = phantom::kLesion;
    c.wm_class = phantom::kWhiteMatter;
    c.forbidden_classes = {0, 1};
    c.output_dir = out;
    return c;
}

std::string without_created(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.find("\"created\"") == std::string::npos) out << line << '\n';
    }
    return out.str();
}

bool trees_equal(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> fa, fb;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
    }
    for (const auto& e : fs::recursive_directory_iterator(b)) {
        if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
    }
    std::sort(fa.begin(), fa.end());
    std::sort(fb.begin(), fb.end());
    if (fa != fb) return false;
    for (const auto& rel : fa) {
        if (rel == kManifestName) {
            if (without_created(a / rel) != without_created(b / rel)) return false;
        } else if (!testsupport::files_equal(a / rel, b / rel)) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_SUITE("pipeline") {
    TEST_CASE("config parsing") {
        const std::string text = R"({
          "inputs": [{"parcellation": "a/p.nii.gz", "lesions": "a/l.nii.gz"}],
          "M": 2, "P": 3, "L": 4, "lesion_class": 5, "wm_class": 3,
          "forbidden_classes": [0, 1], "master_seed": 9, "aggressive_flm": "identity",
          "synth": {"clip_max": 250, "mu_range": [10, 20]}
        })";
        const PipelineConfig c = config_from_json(text, "/data/cfg");
        CHECK(c.M == 2);
        CHECK(c.P == 3);
        CHECK(c.L == 4);
        CHECK(c.master_seed == 9);
        CHECK(c.inputs.at(0).parcellation == fs::path("/data/cfg/a/p.nii.gz"));
        CHECK(c.aggressive.name == "identity");
        CHECK(c.realistic.name == "realistic");
        CHECK(c.synth.clip_max == 250);
        CHECK(c.synth.mu_range == synth::Range{10, 20});
        CHECK(c.synth.sigma_range == synth::Range{0, 30});
        CHECK(c.empty_prior_fraction == 0.2);

        const PipelineConfig again = config_from_json(config_to_json(c), "");
        CHECK(again.M == c.M);
        CHECK(again.synth.mu_range == c.synth.mu_range);
        CHECK(again.forbidden_classes == c.forbidden_classes);
        CHECK(again.aggressive.bands.size() == c.aggressive.bands.size());
    }

    TEST_CASE("custom FLM bands in the config") {
        const std::string text = R"({
          "M": 1, "P": 1, "L": 1, "lesion_class": 5, "wm_class": 3,
          "realistic_flm": {"name": "mine", "bands": [
            {"min_mm3": 0, "max_mm3": 50, "transforms": [["stable", 0.5], ["erode1", 0.5]]},
            {"min_mm3": 50, "max_mm3": null, "transforms": [["remove", 1.0]]}
          ]}
        })";
        const PipelineConfig c = config_from_json(text);
        REQUIRE(c.realistic.bands.size() == 2);
        CHECK(c.realistic.band_for(60).dist.at(0).transform == flm::LesionTransform::remove());
    }

    TEST_CASE("config errors") {
        auto err = [](const std::string& text) {
            try {
                config_from_json(text);
            } catch (const ConfigError& e) {
                return std::string(e.what());
            }
            return std::string("no error");
        };
        const std::string base = R"("lesion_class": 5, "wm_class": 3)";
        CHECK(err("{" + base + R"(, "M": 0})").find("M") != std::string::npos);
        CHECK(err("{" + base + R"(, "bogus": 1})").find("unknown config field 'bogus'") != std::string::npos);
        CHECK(err("{" + base + R"(, "aggressive_flm": "wild"})").find("realistic") != std::string::npos);
        CHECK(err(R"({"lesion_class": 3, "wm_class": 3})") != "no error");
        CHECK(err("{" + base + R"(, "forbidden_classes": [3]})") != "no error");
        CHECK(err("{" + base + R"(, "empty_prior_fraction": 1.5})") != "no error");
        CHECK(err("{" + base + R"(, "synth": {"scale": [2, 1]}})") != "no error");
        CHECK(err("{ not json") != "no error");
        CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
    }

    TEST_CASE("triplet counts and layout") {
        testsupport::TempDir dir("pipe");
        PipelineConfig c = small_config(dir / "one", 1, 1, 1);
        const Manifest one = generate_dataset(phantoms(1), c, {1});
        CHECK(one.records.size() == 1);
        CHECK(fs::exists(dir / "one" / kManifestName));
        CHECK(fs::exists(dir / "one" / one.records[0].image));

        c = small_config(dir / "many", 2, 2, 3);
        const Manifest many = generate_dataset(phantoms(2), c, {2});
        CHECK(many.records.size() == 24);
        CHECK(many.expected_records() == 24);
        CHECK(many.scans.size() == 8);
        CHECK(many.augments.size() == 4);
        const Manifest back = read_manifest(dir / "many" / kManifestName);
        CHECK(back.records.size() == 24);
        CHECK(back.records[5].prior == many.records[5].prior);

        // Every triplet shares geometry and respects the forbidden classes.
        for (const auto& r : many.records) {
            const LesionMask prior = read_nifti_mask(dir / "many" / r.prior);
            const ScalarVolume img = read_nifti_scalar(dir / "many" / r.image);
            CHECK(prior.geometry().same_grid(img.geometry(), 1e-6));
            CHECK((count_foreground(prior) == 0) == r.prior_is_empty);
            if (r.empty_substituted) CHECK(r.prior_is_empty);
        }
        CHECK(verify_manifest(dir / "many" / kManifestName, 2).ok());
    }

    TEST_CASE("output does not depend on worker count") {
        testsupport::TempDir dir("det");
        const auto in = phantoms(2);
        generate_dataset(in, small_config(dir / "w1", 2, 2, 2), {1});
        generate_dataset(in, small_config(dir / "w4", 2, 2, 2), {4});
        generate_dataset(in, small_config(dir / "w1b", 2, 2, 2), {1});
        CHECK(trees_equal(dir / "w1", dir / "w4"));
        CHECK(trees_equal(dir / "w1", dir / "w1b"));

        PipelineConfig other = small_config(dir / "s2", 2, 2, 2);
        other.master_seed = 1;
        generate_dataset(in, other, {1});
        CHECK_FALSE(trees_equal(dir / "w1", dir / "s2"));
    }

    TEST_CASE("verify detects damage") {
        testsupport::TempDir dir("verify");
        const Manifest m = generate_dataset(phantoms(1), small_config(dir.path(), 1, 2, 1), {1});
        const fs::path manifest = dir / kManifestName;
        REQUIRE(verify_manifest(manifest).ok());

        // Push one voxel above the clip limit.
        const fs::path img_path = dir / m.records[0].image;
        ScalarVolume img = read_nifti_scalar(img_path);
        img[img.size() / 2] = 1e6;
        write_nifti(img, img_path);
        VerifyReport r = verify_manifest(manifest);
        CHECK_FALSE(r.ok());
        for (const auto& c : r.checks) {
            if (c.name == "intensity_clip") CHECK_FALSE(c.passed);
            if (c.name == "files_present") CHECK(c.passed);
        }

        fs::remove(dir / m.records[1].prior);
        r = verify_manifest(manifest);
        bool found = false;
        for (const auto& c : r.checks) {
            if (c.name != "files_present") continue;
            CHECK_FALSE(c.passed);
            for (const auto& f : c.failures) found = found || f.find(m.records[1].prior) != std::string::npos;
        }
        CHECK(found);
    }

    TEST_CASE("empty prior fraction") {
        testsupport::TempDir dir("empty");
        PipelineConfig all = small_config(dir / "all", 1, 2, 4);
        all.empty_prior_fraction = 1.0;
        for (const auto& r : generate_dataset(phantoms(1), all, {2}).records) {
            CHECK(r.empty_substituted);
            CHECK(r.prior_is_empty);
        }
        PipelineConfig none = small_config(dir / "none", 1, 2, 4);
        none.empty_prior_fraction = 0.0;
        for (const auto& r : generate_dataset(phantoms(1), none, {2}).records) CHECK_FALSE(r.empty_substituted);
    }

    TEST_CASE("shared warp mode") {
        testsupport::TempDir dir("shared");
        PipelineConfig c = small_config(dir.path(), 1, 3, 1);
        c.independent_warps = false;
        const Manifest m = generate_dataset(phantoms(1), c, {2});
        REQUIRE(m.scans.size() == 3);
        const LabelVolume first = read_nifti_labels(dir / m.scans[0].labels);
        for (const auto& s : m.scans) CHECK(read_nifti_labels(dir / s.labels) == first);

        testsupport::TempDir dir2("indep");
        const Manifest ind = generate_dataset(phantoms(1), small_config(dir2.path(), 1, 3, 1), {2});
        CHECK_FALSE(read_nifti_labels(dir2 / ind.scans[0].labels) == read_nifti_labels(dir2 / ind.scans[1].labels));
    }

    TEST_CASE("input validation") {
        testsupport::TempDir dir("bad");
        auto in = phantoms(1);
        PipelineConfig c = small_config(dir.path(), 1, 1, 1);
        c.wm_class = 9;
        CHECK_THROWS_AS(generate_dataset(in, c, {1}), ConfigError);

        auto empty = phantoms(1);
        empty[0].lesions = LesionMask(empty[0].lesions.geometry(), 0);
        CHECK_THROWS_AS(generate_dataset(empty, small_config(dir.path(), 1, 1, 1), {1}), ConfigError);

        auto mismatch = phantoms(1);
        mismatch[0].lesions = LesionMask(Geometry::with_spacing({5, 5, 5}, {1, 1, 1}), 0);
        CHECK_THROWS_AS(generate_dataset(mismatch, small_config(dir.path(), 1, 1, 1), {1}), GeometryError);
    }
}
