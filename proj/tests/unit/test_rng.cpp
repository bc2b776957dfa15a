#include <doctest.h>

#include <cmath>
#include <set>

#include "lesionsynth/rng.hpp"
#include "test_support.hpp"

using namespace lesionsynth;

TEST_SUITE("rng") {
    TEST_CASE("philox4x32-10 known answers") {
        // Random123 kat_vectors.
        auto r = philox4x32({0, 0, 0, 0}, {0, 0});
        CHECK(r == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
        r = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
        CHECK(r == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
        r = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
        CHECK(r == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
    }

    TEST_CASE("same seed and path reproduce, different paths diverge") {
        RngStream a(7, {1, 2}), b(7, {1, 2}), c(7, {1, 3}), d(8, {1, 2});
        std::vector<std::uint64_t> va, vb, vc, vd;
        for (int i = 0; i < 16; ++i) {
            va.push_back(a.next_u64());
            vb.push_back(b.next_u64());
            vc.push_back(c.next_u64());
            vd.push_back(d.next_u64());
        }
        CHECK(va == vb);
        CHECK(va != vc);
        CHECK(va != vd);
    }

    TEST_CASE("child streams do not consume parent state") {
        RngStream a(3), b(3);
        (void)a.child(5).next_u64();
        CHECK(a.next_u64() == b.next_u64());
        CHECK(RngStream(3).child({4, 5}).next_u64() == RngStream(3, {4, 5}).next_u64());
        CHECK(RngStream(3).child(4).child(5).next_u64() == RngStream(3, {4, 5}).next_u64());
    }

    TEST_CASE("uniform draws pass a KS test") {
        RngStream r(11);
        std::vector<double> v;
        for (int i = 0; i < 20000; ++i) {
            const double u = r.uniform();
            REQUIRE(u >= 0.0);
            REQUIRE(u < 1.0);
            v.push_back(u);
        }
        // 1% critical value 1.63 / sqrt(n).
        CHECK(testsupport::ks_uniform(v, 0.0, 1.0) < 1.63 / std::sqrt(20000.0));
    }

    TEST_CASE("normal draws pass a KS test") {
        RngStream r(12);
        std::vector<double> v;
        for (int i = 0; i < 20000; ++i) v.push_back(r.normal(2.0, 3.0));
        CHECK(testsupport::ks_normal(v, 2.0, 3.0) < 1.63 / std::sqrt(20000.0));
    }

    TEST_CASE("below is in range and roughly uniform") {
        RngStream r(13);
        std::vector<int> counts(7, 0);
        for (int i = 0; i < 70000; ++i) {
            const auto v = r.below(7);
            REQUIRE(v < 7);
            counts[v]++;
        }
        for (int c : counts) CHECK(std::abs(c - 10000) < 500);
        CHECK(r.below(1) == 0);
    }
}
