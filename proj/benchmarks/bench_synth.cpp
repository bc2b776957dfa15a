#include <benchmark/benchmark.h>

#include "lesionsynth/flm.hpp"
#include "lesionsynth/phantom.hpp"
#include "lesionsynth/synthgen.hpp"

using namespace lesionsynth;

namespace {

void BM_SynthesizeScan(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto ph = phantom::make({.dims = {n, n, n}, .seed = 4});
    const LabelVolume merged = flm::merge_lesions_into_parcellation(ph.parcellation, ph.lesions, phantom::kLesion);
    const synth::GmmSynthConfig cfg;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            synth::synthesize_scan(merged, cfg, phantom::kLesion, phantom::kWhiteMatter, RngStream(seed++)));
    }
}
BENCHMARK(BM_SynthesizeScan)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SvfIntegration(benchmark::State& state) {
    const Geometry g = Geometry::with_spacing({64, 64, 64}, {1, 1, 1});
    RngStream rng(5);
    const auto v = synth::sample_velocity(g, 3.0, rng);
    for (auto _ : state) benchmark::DoNotOptimize(synth::integrate_svf(v, 8));
}
BENCHMARK(BM_SvfIntegration)->Unit(benchmark::kMillisecond);

}  // namespace
