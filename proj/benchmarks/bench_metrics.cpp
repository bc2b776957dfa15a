#include <benchmark/benchmark.h>

#include "lesionsynth/metrics.hpp"
#include "lesionsynth/morphology.hpp"
#include "lesionsynth/phantom.hpp"

using namespace lesionsynth;

namespace {

void BM_EvaluateCase(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const LesionMask gt = phantom::make({.dims = {n, n, n}, .lesions = 10, .seed = 2}).lesions;
    const LesionMask pred = morph::dilate(gt, 1);
    for (auto _ : state) benchmark::DoNotOptimize(metrics::evaluate_case(gt, pred));
}
BENCHMARK(BM_EvaluateCase)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_SurfaceDistance(benchmark::State& state) {
    const LesionMask gt = phantom::make({.dims = {96, 96, 96}, .lesions = 10, .seed = 3}).lesions;
    const auto a = metrics::extract_surfels(gt);
    const auto b = metrics::extract_surfels(morph::erode(morph::dilate(gt, 2), 1));
    for (auto _ : state) benchmark::DoNotOptimize(metrics::hd95(a, b));
    state.counters["surfels"] = static_cast<double>(a.size() + b.size());
}
BENCHMARK(BM_SurfaceDistance)->Unit(benchmark::kMillisecond);

}  // namespace
