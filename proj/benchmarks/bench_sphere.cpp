#include <benchmark/benchmark.h>

#include "sphwave/sphere.hpp"

using namespace sphwave;

static void BM_ShVector(benchmark::State& state) {
    const int order = static_cast<int>(state.range(0));
    const Direction d(0.7, -0.3);
    for (auto _ : state) benchmark::DoNotOptimize(sh_vector(order, d));
}
BENCHMARK(BM_ShVector)->Arg(1)->Arg(3)->Arg(5);

static void BM_DecodeAnalytic(benchmark::State& state) {
    SpeakerLayout layout;
    int i = 0;
    for (const auto& dir : sample_directions(24, SampleScheme::fibonacci))
        layout.speakers.push_back({"s" + std::to_string(i++), dir, {}});
    for (auto _ : state)
        benchmark::DoNotOptimize(decode_analytic(layout, 3, DecodeMode::pseudoinverse, 1e-9));
}
BENCHMARK(BM_DecodeAnalytic);

static void BM_Haversine(benchmark::State& state) {
    const Direction a(0.3, 0.2), b(-1.1, -0.4);
    for (auto _ : state) benchmark::DoNotOptimize(haversine(a, b));
}
BENCHMARK(BM_Haversine);
