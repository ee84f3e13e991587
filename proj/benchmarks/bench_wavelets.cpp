#include <benchmark/benchmark.h>

#include <random>

#include "sphwave/wavelets.hpp"

using namespace sphwave;

namespace {

const SubdivisionMesh& mesh3() {
    static const SubdivisionMesh mesh = build_mesh(3);
    return mesh;
}

Eigen::VectorXd noise(int n) {
    std::mt19937 rng(1);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
}

}  // namespace

static void BM_BuildBank(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(make_filter_bank(mesh3(), WaveletFamily::interpolating));
}
BENCHMARK(BM_BuildBank);

static void BM_ForwardTransform(benchmark::State& state) {
    const FilterBank bank = make_filter_bank(mesh3(), WaveletFamily::sint);
    const Eigen::VectorXd f = noise(258);
    for (auto _ : state) benchmark::DoNotOptimize(forward_transform(bank, f, 2));
}
BENCHMARK(BM_ForwardTransform);

static void BM_InverseTransform(benchmark::State& state) {
    const FilterBank bank = make_filter_bank(mesh3(), WaveletFamily::sint);
    const WaveletCoefficients wc = forward_transform(bank, noise(258), 2);
    for (auto _ : state) benchmark::DoNotOptimize(inverse_transform(bank, wc, 3));
}
BENCHMARK(BM_InverseTransform);

static void BM_VbapGains(benchmark::State& state) {
    const MeshLevel& finest = mesh3().levels[3];
    const Direction d(0.9, 0.4);
    for (auto _ : state) benchmark::DoNotOptimize(vbap_gains(finest, d));
}
BENCHMARK(BM_VbapGains);
