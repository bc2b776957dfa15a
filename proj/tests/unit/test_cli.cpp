#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lesionsynth/csv.hpp"
#include "lesionsynth/flm.hpp"
#include "lesionsynth/nifti.hpp"
#include "test_support.hpp"

using namespace lesionsynth;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string output;
};

Run run(const testsupport::TempDir& dir, const std::string& args) {
    const fs::path log = dir / "cli.log";
    const std::string cmd = std::string("\"") + LESIONSYNTH_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(log);
    std::stringstream ss;
    ss << f.rdbuf();
    r.output = ss.str();
    return r;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p);
    f << s;
}

std::string config_for(const fs::path& phantoms, int m) {
    std::ostringstream s;
    s << R"({"inputs": [{"parcellation": ")" << (phantoms / "sub-000/parcellation.nii.gz").string()
      << R"(", "lesions": ")" << (phantoms / "sub-000/lesions.nii.gz").string() << R"("}],
      "M": )" << m << R"(, "P": 1, "L": 2, "lesion_class": 5, "wm_class": 3, "forbidden_classes": [0, 1]})";
    return s.str();
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("version and usage") {
        testsupport::TempDir dir("cli");
        const Run v = run(dir, "--version");
        CHECK(v.code == 0);
        CHECK(v.output.find("lesionsynth") != std::string::npos);
        CHECK(v.output.find("schema") != std::string::npos);
        CHECK(run(dir, "").code == 2);
        CHECK(run(dir, "frobnicate").code == 2);
        CHECK(run(dir, "--workers 0 verify --manifest " + (dir / "cli.log").string()).code == 2);
    }

    TEST_CASE("synth exit codes and outputs") {
        testsupport::TempDir dir("cli");
        REQUIRE(run(dir, "phantom --out " + (dir / "ph").string() + " --count 1 --dims 20,20,20").code == 0);
        CHECK(fs::exists(dir / "ph/sub-000/parcellation.nii.gz"));

        const Run missing = run(dir, "synth --config " + (dir / "nope.json").string() + " --out " + (dir / "o").string());
        CHECK(missing.code == 2);
        CHECK(missing.output.rfind("error: ", 0) == 0);

        write_text(dir / "zero.json", config_for(dir / "ph", 0));
        const Run zero = run(dir, "synth --config " + (dir / "zero.json").string() + " --out " + (dir / "o").string());
        CHECK(zero.code == 2);
        CHECK(zero.output.find("M") != std::string::npos);

        write_text(dir / "ok.json", config_for(dir / "ph", 2));
        const Run ok = run(dir, "--workers 2 -q synth --verify --config " + (dir / "ok.json").string() + " --out " +
                                    (dir / "ds").string());
        CHECK(ok.code == 0);
        CHECK(fs::exists(dir / "ds/manifest.json"));
        CHECK(run(dir, "verify --manifest " + (dir / "ds/manifest.json").string()).code == 0);
        CHECK(fs::exists(dir / "ds/sub-000/aug-001/scan-000/prior-01.nii.gz"));
    }

    TEST_CASE("flm subcommand") {
        testsupport::TempDir dir("cli");
        REQUIRE(run(dir, "phantom --out " + (dir / "ph").string() + " --count 1 --dims 20,20,20").code == 0);
        const std::string in = "--mask " + (dir / "ph/sub-000/lesions.nii.gz").string() + " --parc " +
                               (dir / "ph/sub-000/parcellation.nii.gz").string();
        const Run bad = run(dir, "flm " + in + " --preset wild --n 3 --out " + (dir / "f").string());
        CHECK(bad.code == 2);
        CHECK(bad.output.find("realistic") != std::string::npos);

        REQUIRE(run(dir, "flm " + in + " --preset realistic --n 3 --forbidden 0,1 --out " + (dir / "f").string()).code == 0);
        int files = 0;
        for (const auto& e : fs::directory_iterator(dir / "f")) files += e.is_regular_file();
        CHECK(files == 3);
        const LabelVolume parc = read_nifti_labels(dir / "ph/sub-000/parcellation.nii.gz");
        const LesionMask m = read_nifti_mask(dir / "f/flm-001.nii.gz");
        CHECK(flm::clamp_to_plausible(m, parc, {0, 1}) == m);
    }

    TEST_CASE("eval and report") {
        testsupport::TempDir dir("cli");
        REQUIRE(run(dir, "phantom --out " + (dir / "ph").string() + " --count 3 --dims 16,16,16").code == 0);
        fs::create_directories(dir / "gt");
        fs::create_directories(dir / "pred");
        for (int i = 0; i < 3; ++i) {
            const std::string name = "case" + std::to_string(i) + ".nii.gz";
            const fs::path src = dir / ("ph/sub-00" + std::to_string(i)) / "lesions.nii.gz";
            fs::copy_file(src, dir / "gt" / name);
            if (i < 2) fs::copy_file(src, dir / "pred" / name);
        }
        // Orphaned ground truth.
        const Run orphan = run(dir, "eval --gt " + (dir / "gt").string() + " --pred " + (dir / "pred").string() +
                                        " --out " + (dir / "m.csv").string());
        CHECK(orphan.code == 2);
        CHECK(orphan.output.find("case2") != std::string::npos);

        fs::copy_file(dir / "gt/case2.nii.gz", dir / "pred/case2.nii.gz");
        REQUIRE(run(dir, "eval --gt " + (dir / "gt").string() + " --pred " + (dir / "pred").string() + " --out " +
                             (dir / "m.csv").string() + " --dataset ph")
                    .code == 0);
        const csv::Table t = csv::read(dir / "m.csv");
        CHECK(t.rows.size() == 3);
        auto col = [&](const std::string& name) {
            return static_cast<std::size_t>(std::find(t.header.begin(), t.header.end(), name) - t.header.begin());
        };
        for (const auto& row : t.rows) {
            CHECK(std::stod(row[col("dsc")]) == 1.0);
            CHECK(std::stod(row[col("lesional_dsc")]) == 1.0);
            CHECK(std::stod(row[col("ppv")]) == 1.0);
            CHECK(std::stod(row[col("fpr")]) == 0.0);
            CHECK(std::stod(row[col("hd95_mm")]) == 0.0);
            CHECK(row[col("dataset")] == "ph");
        }

        fs::copy_file(dir / "m.csv", dir / "m2.csv");
        REQUIRE(run(dir, "report --metrics " + (dir / "m.csv").string() + " " + (dir / "m2.csv").string() +
                             " --names a,b --out " + (dir / "rep").string())
                    .code == 0);
        const csv::Table comp = csv::read(dir / "rep/comparisons.csv");
        CHECK_FALSE(comp.rows.empty());
        for (const auto& row : comp.rows) CHECK(row.back() == "ns");
    }

    TEST_CASE("infer-prep") {
        testsupport::TempDir dir("cli");
        REQUIRE(run(dir, "phantom --out " + (dir / "ph").string() + " --count 1 --dims 12,12,12 --spacing 2,2,2").code == 0);
        REQUIRE(run(dir, "infer-prep --in " + (dir / "ph/sub-000/image.nii.gz").string() + " --prior " +
                             (dir / "ph/sub-000/lesions.nii.gz").string() + " --out " + (dir / "ip").string() +
                             " --predictor copy-prior --patch 8,8,8")
                    .code == 0);
        const ScalarVolume img = read_nifti_scalar(dir / "ip/image.nii.gz");
        CHECK(img.dims() == Dims{24, 24, 24});
        const LesionMask prior = read_nifti_mask(dir / "ip/prior.nii.gz");
        CHECK(read_nifti_mask(dir / "ip/mask.nii.gz") == prior);
        CHECK(run(dir, "infer-prep --in " + (dir / "ph/sub-000/image.nii.gz").string() + " --out " +
                           (dir / "ip2").string() + " --predictor unet")
                  .code == 2);
    }
}
