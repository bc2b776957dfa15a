#include <doctest.h>

#include <map>

#include "lesionsynth/error.hpp"
#include "lesionsynth/flm.hpp"
#include "test_support.hpp"

using namespace lesionsynth;
using namespace lesionsynth::flm;

namespace {

Geometry iso(int n) { return Geometry::with_spacing({n, n, n}, {1, 1, 1}); }

std::map<std::string, double> frequencies(double v, const FlmConfig& cfg, int draws, std::uint64_t seed) {
    RngStream rng(seed);
    std::map<std::string, double> f;
    for (int i = 0; i < draws; ++i) f[sample_transform(v, cfg, rng).name()] += 1.0 / draws;
    return f;
}

}  // namespace

TEST_SUITE("flm") {
    TEST_CASE("transform names round trip") {
        for (const char* n : {"stable", "remove", "erode1", "erode2", "erode3", "dilate1", "dilate3"}) {
            CHECK(LesionTransform::parse(n).name() == n);
        }
        CHECK_THROWS_AS(LesionTransform::parse("erode4"), ConfigError);
        CHECK_THROWS_AS(LesionTransform::parse("shrink"), ConfigError);
    }

    TEST_CASE("aggressive preset matches the published table") {
        const FlmConfig c = aggressive_preset();
        REQUIRE(c.bands.size() == 3);
        CHECK(c.bands[0].max_mm3 == 200.0);
        CHECK(c.bands[1].max_mm3 == 1000.0);
        auto p = [&](double v, const char* name) {
            for (const auto& wt : c.band_for(v).dist) {
                if (wt.transform.name() == name) return wt.probability;
            }
            return 0.0;
        };
        CHECK(p(100, "stable") == 0.90);
        CHECK(p(100, "remove") == 0.10);
        CHECK(p(199.999, "stable") == 0.90);
        CHECK(p(200, "stable") == 0.70);
        for (const char* n : {"erode1", "dilate1", "remove"}) CHECK(p(500, n) == 0.10);
        CHECK(p(1000, "stable") == 0.55);
        for (const char* n : {"erode1", "dilate1", "remove"}) CHECK(p(5000, n) == 0.15);
    }

    TEST_CASE("realistic preset matches the published table") {
        const FlmConfig c = realistic_preset();
        auto p = [&](double v, const char* name) {
            for (const auto& wt : c.band_for(v).dist) {
                if (wt.transform.name() == name) return wt.probability;
            }
            return 0.0;
        };
        CHECK(p(100, "stable") == 0.30);
        CHECK(p(100, "erode1") == 0.35);
        CHECK(p(100, "erode2") == 0.10);
        CHECK(p(100, "erode3") == 0.0);
        CHECK(p(100, "remove") == 0.24);
        CHECK(p(100, "dilate1") == 0.01);
        CHECK(p(250, "erode2") == 0.08);
        CHECK(p(2500, "erode3") == 0.02);  // 2500 is still in the middle band
        CHECK(p(2500.001, "stable") == 1.0);
    }

    TEST_CASE("preset lookup") {
        CHECK(preset("identity").bands.size() == 1);
        CHECK(preset_names().size() >= 3);
        CHECK_THROWS_WITH_AS(preset("bogus"), doctest::Contains("realistic"), ConfigError);
    }

    TEST_CASE("invalid bands are rejected") {
        FlmConfig c = aggressive_preset();
        c.bands[1].min_mm3 = 150;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = aggressive_preset();
        c.bands[0].dist[0].probability = 0.8;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = aggressive_preset();
        c.bands.pop_back();
        CHECK_THROWS_AS(c.validate(), ConfigError);
    }

    TEST_CASE("sampled frequencies match configured probabilities") {
        const auto agg = frequencies(100, aggressive_preset(), 100000, 31);
        CHECK(std::abs(agg.at("stable") - 0.90) < 0.01);
        CHECK(std::abs(agg.at("remove") - 0.10) < 0.01);
        const auto real = frequencies(500, realistic_preset(), 100000, 32);
        const std::map<std::string, double> expected{{"stable", .30}, {"erode1", .35}, {"erode2", .08},
                                                     {"erode3", .02}, {"remove", .24}, {"dilate1", .01}};
        for (const auto& [name, p] : expected) CHECK(std::abs(real.at(name) - p) < 0.01);
        const auto big = frequencies(3000, realistic_preset(), 10000, 33);
        CHECK(big.at("stable") == doctest::Approx(1.0));
    }

    TEST_CASE("simulate_prior basics") {
        const RngStream rng(40);
        CHECK(count_foreground(simulate_prior(LesionMask(iso(8), 0), realistic_preset(), rng)) == 0);
        // 3375 mm^3 cube: above 2500, always stable under the realistic preset.
        LesionMask big(iso(20), 0);
        for (int k = 2; k < 17; ++k)
            for (int j = 2; j < 17; ++j)
                for (int i = 2; i < 17; ++i) big.at(i, j, k) = 1;
        for (std::uint64_t s = 0; s < 20; ++s) {
            CHECK(simulate_prior(big, realistic_preset(), RngStream(s)) == big);
        }
        RngStream r2(41);
        const LesionMask x = testsupport::random_blobs(iso(16), 4, 30, r2);
        CHECK(simulate_prior(x, identity_config(), rng) == x);
        CHECK(simulate_prior(x, aggressive_preset(), rng) == simulate_prior(x, aggressive_preset(), rng));
    }

    TEST_CASE("non-dilated components stay inside their input component") {
        for (std::uint64_t t = 0; t < 200; ++t) {
            RngStream r(1000 + t);
            const LesionMask x = testsupport::random_blobs(iso(14), 3, 30, r);
            const auto cm = morph::connected_components(x, kLesionConnectivity);
            const PriorResult res = simulate_prior_detailed(x, realistic_preset(), RngStream(t));
            REQUIRE(res.lesions.size() == static_cast<std::size_t>(cm.count()));
            LesionMask allowed(x.geometry(), 0);
            for (const auto& l : res.lesions) {
                const bool grows = l.transform.kind == LesionTransform::Kind::dilate;
                LesionMask comp(x.geometry(), 0);
                for (std::size_t n = 0; n < comp.size(); ++n) comp[n] = cm.labels[n] == l.component_id;
                const LesionMask reach = grows ? morph::dilate(comp, l.transform.iterations) : comp;
                for (std::size_t n = 0; n < comp.size(); ++n) allowed[n] |= reach[n];
                if (l.transform.kind == LesionTransform::Kind::remove) CHECK(l.voxels_after == 0);
                if (l.transform.kind == LesionTransform::Kind::stable) CHECK(l.voxels_after == cm.voxel_counts[l.component_id - 1]);
            }
            for (std::size_t n = 0; n < x.size(); ++n) {
                if (res.mask[n]) REQUIRE(allowed[n]);
            }
        }
    }

    TEST_CASE("adding a lesion does not perturb the others") {
        LesionMask a(iso(20), 0);
        for (int i = 2; i < 6; ++i) a.at(i, 3, 3) = 1;
        LesionMask b = a;
        for (int i = 12; i < 16; ++i) b.at(i, 15, 15) = 1;
        const auto ra = simulate_prior_detailed(a, aggressive_preset(), RngStream(5));
        const auto rb = simulate_prior_detailed(b, aggressive_preset(), RngStream(5));
        CHECK(ra.lesions[0].transform == rb.lesions[0].transform);
    }

    TEST_CASE("clamp and merge follow voxelwise set logic") {
        RngStream rng(50);
        const Geometry g = iso(10);
        std::vector<std::int32_t> labels(g.voxel_count());
        for (auto& v : labels) v = static_cast<std::int32_t>(rng.below(5));
        const LabelVolume parc(g, labels, 6);
        const LesionMask m = testsupport::random_mask(g, 0.3, rng);
        const std::set<int> forbidden{0, 1};
        const LesionMask c = clamp_to_plausible(m, parc, forbidden);
        for (std::size_t n = 0; n < m.size(); ++n) CHECK(c[n] == (m[n] && !forbidden.contains(labels[n]) ? 1 : 0));
        CHECK(clamp_to_plausible(c, parc, forbidden) == c);
        CHECK(clamp_to_plausible(m, parc, {}) == m);
        const LabelVolume merged = merge_lesions_into_parcellation(parc, c, 5);
        for (std::size_t n = 0; n < m.size(); ++n) CHECK(merged[n] == (c[n] ? 5 : labels[n]));
        CHECK(merge_lesions_into_parcellation(parc, LesionMask(g, 0), 5).values() == parc.values());
        CHECK_THROWS_AS(clamp_to_plausible(LesionMask(iso(9), 0), parc, forbidden), GeometryError);
    }
}
