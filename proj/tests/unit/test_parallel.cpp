#include <doctest.h>

#include <atomic>
#include <stdexcept>
#include <vector>

#include "lesionsynth/parallel.hpp"

using namespace lesionsynth;

TEST_SUITE("parallel") {
    TEST_CASE("every index runs exactly once") {
        for (unsigned workers : {0u, 1u, 2u, 8u, 33u}) {
            std::vector<std::atomic<int>> hits(1000);
            parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i].fetch_add(1); });
            for (const auto& h : hits) CHECK(h.load() == 1);
        }
        parallel_for(0, 4, [](std::size_t) { FAIL("called for an empty range"); });
        CHECK(default_worker_count() >= 1);
    }

    TEST_CASE("exceptions propagate") {
        CHECK_THROWS_AS(parallel_for(50, 4,
                                     [](std::size_t i) {
                                         if (i == 17) throw std::runtime_error("boom");
                                     }),
                        std::runtime_error);
    }

    TEST_CASE("slot results do not depend on worker count") {
        auto run = [](unsigned w) {
            std::vector<double> out(257);
            parallel_for(out.size(), w, [&](std::size_t i) {
                double x = 0;
                for (std::size_t k = 0; k <= i; ++k) x += 1.0 / static_cast<double>(k + 1);
                out[i] = x;
            });
            return out;
        };
        const auto ref = run(1);
        CHECK(run(3) == ref);
        CHECK(run(16) == ref);
    }
}
