#include <benchmark/benchmark.h>

#include "lesionsynth/infer.hpp"

using namespace lesionsynth;

namespace {

void BM_SlidingWindow(benchmark::State& state) {
    const Geometry g = Geometry::with_spacing({160, 160, 128}, {1, 1, 1});
    const infer::TwoChannelInput in{ScalarVolume(g, 0.0), LesionMask(g, 0)};
    const auto pred = infer::make_predictor("copy-prior");
    const infer::WindowOptions opts{0.5, static_cast<unsigned>(state.range(0))};
    for (auto _ : state) benchmark::DoNotOptimize(infer::sliding_window_predict(in, *pred, opts));
}
BENCHMARK(BM_SlidingWindow)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Preprocess(benchmark::State& state) {
    const Geometry g = Geometry::with_spacing({96, 96, 48}, {1, 1, 3});
    ScalarVolume img(g);
    for (std::size_t n = 0; n < img.size(); ++n) img[n] = static_cast<double>(n % 97);
    for (auto _ : state) benchmark::DoNotOptimize(infer::preprocess(img));
}
BENCHMARK(BM_Preprocess)->Unit(benchmark::kMillisecond);

}  // namespace
