#include <doctest.h>

#include <algorithm>

#include "lesionsynth/error.hpp"
#include "lesionsynth/morphology.hpp"
#include "test_support.hpp"

using namespace lesionsynth;
using namespace lesionsynth::morph;

namespace {

Geometry iso(int n) { return Geometry::with_spacing({n, n, n}, {1, 1, 1}); }

LesionMask cube(int n, int lo, int hi) {
    LesionMask m(iso(n), 0);
    for (int k = lo; k < hi; ++k)
        for (int j = lo; j < hi; ++j)
            for (int i = lo; i < hi; ++i) m.at(i, j, k) = 1;
    return m;
}

bool subset(const LesionMask& a, const LesionMask& b) {
    for (std::size_t n = 0; n < a.size(); ++n) {
        if (a[n] && !b[n]) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("morphology") {
    TEST_CASE("empty mask has no components") {
        CHECK(connected_components(LesionMask(iso(4), 0)).count() == 0);
    }

    TEST_CASE("corner contact depends on connectivity") {
        LesionMask m(iso(4), 0);
        m.at(1, 1, 1) = 1;
        m.at(2, 2, 2) = 1;
        CHECK(connected_components(m, 26).count() == 1);
        CHECK(connected_components(m, 18).count() == 2);
        CHECK(connected_components(m, 6).count() == 2);
        m.at(2, 2, 2) = 0;
        m.at(2, 2, 1) = 1;  // edge contact
        CHECK(connected_components(m, 18).count() == 1);
        CHECK(connected_components(m, 6).count() == 2);
        CHECK_THROWS_AS(connected_components(m, 8), ConfigError);
    }

    TEST_CASE("component counts match a union-find oracle") {
        RngStream rng(21);
        for (int t = 0; t < 50; ++t) {
            const LesionMask m = testsupport::random_mask(iso(16), 0.15 + 0.005 * t, rng);
            for (int conn : {6, 18, 26}) {
                CHECK(connected_components(m, conn).count() == testsupport::count_components_union_find(m, conn));
            }
        }
    }

    TEST_CASE("ids follow first linear index and volumes follow spacing") {
        const Geometry g = Geometry::with_spacing({6, 6, 6}, {1, 1, 3});
        LesionMask m(g, 0);
        m.at(4, 4, 4) = 1;
        m.at(5, 4, 4) = 1;
        m.at(0, 0, 1) = 1;
        const ComponentMap cm = connected_components(m);
        REQUIRE(cm.count() == 2);
        CHECK(cm.labels[m.index(0, 0, 1)] == 1);
        CHECK(cm.labels[m.index(5, 4, 4)] == 2);
        CHECK(cm.voxel_counts == std::vector<std::size_t>{1, 2});
        CHECK(cm.volumes_mm3[1] == doctest::Approx(6.0));
        CHECK(component_volume_mm3(10, g) == doctest::Approx(30.0));
        CHECK(component_volume_mm3(10, iso(3)) == doctest::Approx(10.0));
        CHECK(cm.foreground() == m);
        CHECK(connected_components(m).labels == cm.labels);
    }

    TEST_CASE("erosion examples") {
        LesionMask one(iso(5), 0);
        one.at(2, 2, 2) = 1;
        CHECK(count_foreground(erode(one, 1)) == 0);
        const LesionMask c = cube(9, 2, 7);
        CHECK(erode(c, 1) == cube(9, 3, 6));
        CHECK(count_foreground(erode(c, 1)) == 27);
        CHECK(count_foreground(erode(c, 3)) == 0);
        // The volume boundary counts as outside.
        CHECK(count_foreground(erode(LesionMask(iso(3), 1), 1)) == 1);
        CHECK_THROWS_AS(erode(c, 0), ConfigError);
    }

    TEST_CASE("dilation examples") {
        LesionMask centre(iso(5), 0);
        centre.at(2, 2, 2) = 1;
        CHECK(count_foreground(dilate(centre, 1)) == 7);
        LesionMask corner(iso(5), 0);
        corner.at(0, 0, 0) = 1;
        CHECK(count_foreground(dilate(corner, 1)) == 4);
        // Two iterations of the cross give the L1 ball of radius 2.
        CHECK(count_foreground(dilate(centre, 2)) == 25);
    }

    TEST_CASE("closing contains the input and iterations compose") {
        RngStream rng(22);
        for (int t = 0; t < 50; ++t) {
            LesionMask x = testsupport::random_blobs(iso(14), 3, 25, rng);
            // Closing only contains the input away from the volume edge.
            for (int k = 0; k < 14; ++k)
                for (int j = 0; j < 14; ++j)
                    for (int i = 0; i < 14; ++i) {
                        if (std::min({i, j, k}) == 0 || std::max({i, j, k}) == 13) x.at(i, j, k) = 0;
                    }
            CHECK(subset(x, erode(dilate(x, 1), 1)));
            CHECK(subset(erode(x, 1), x));
            CHECK(subset(x, dilate(x, 1)));
            CHECK(erode(x, 2) == erode(erode(x, 1), 1));
            CHECK(dilate(x, 3) == dilate(dilate(x, 1), 2));
        }
    }

    TEST_CASE("erosion and dilation are monotone") {
        RngStream rng(23);
        for (int t = 0; t < 20; ++t) {
            const LesionMask a = testsupport::random_blobs(iso(12), 2, 20, rng);
            LesionMask b = a;
            const LesionMask extra = testsupport::random_blobs(iso(12), 2, 20, rng);
            for (std::size_t n = 0; n < b.size(); ++n) b[n] = a[n] | extra[n];
            CHECK(subset(erode(a, 1), erode(b, 1)));
            CHECK(subset(dilate(a, 1), dilate(b, 1)));
        }
    }

    TEST_CASE("patches agree with whole-volume operations") {
        RngStream rng(24);
        const LesionMask x = testsupport::random_blobs(iso(16), 1, 40, rng);
        const ComponentMap cm = connected_components(x);
        for (int id = 1; id <= cm.count(); ++id) {
            LesionMask comp(x.geometry(), 0);
            for (std::size_t n = 0; n < comp.size(); ++n) comp[n] = cm.labels[n] == id;
            const BinaryPatch p = BinaryPatch::from_component(cm, id, 2);
            LesionMask out(x.geometry(), 0);
            dilate(p, 2).paste_into(out);
            CHECK(out == dilate(comp, 2));
            LesionMask eroded(x.geometry(), 0);
            erode(p, 1).paste_into(eroded);
            CHECK(eroded == erode(comp, 1));
        }
    }
}
