#include <benchmark/benchmark.h>

#include "lesionsynth/flm.hpp"
#include "lesionsynth/morphology.hpp"
#include "lesionsynth/phantom.hpp"

using namespace lesionsynth;

namespace {

LesionMask lesions(int n) {
    return phantom::make({.dims = {n, n, n}, .lesions = 12, .seed = 1}).lesions;
}

void BM_ConnectedComponents(benchmark::State& state) {
    const LesionMask m = lesions(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(morph::connected_components(m, 26));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.size()));
}
BENCHMARK(BM_ConnectedComponents)->Arg(64)->Arg(128);

void BM_Dilate(benchmark::State& state) {
    const LesionMask m = lesions(96);
    for (auto _ : state) benchmark::DoNotOptimize(morph::dilate(m, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_Dilate)->Arg(1)->Arg(3);

void BM_SimulatePrior(benchmark::State& state) {
    const LesionMask m = lesions(static_cast<int>(state.range(0)));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(flm::simulate_prior(m, flm::realistic_preset(), RngStream(seed++)));
}
BENCHMARK(BM_SimulatePrior)->Arg(64)->Arg(128);

}  // namespace
