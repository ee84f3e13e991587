#include <benchmark/benchmark.h>

#include <memory>

#include "sphwave/decoderopt.hpp"

using namespace sphwave;

namespace {

SpeakerLayout bed704() {
    constexpr double deg = 3.14159265358979323846 / 180.0;
    SpeakerLayout l;
    l.name = "7.0.4";
    l.speakers = {
        {"C", Direction(0, 0), {}},
        {"L", Direction(30 * deg, 0), {}},
        {"R", Direction(-30 * deg, 0), {}},
        {"Lss", Direction(90 * deg, 0), {}},
        {"Rss", Direction(-90 * deg, 0), {}},
        {"Lrs", Direction(135 * deg, 0), {}},
        {"Rrs", Direction(-135 * deg, 0), {}},
        {"Ltf", Direction(45 * deg, 45 * deg), {}},
        {"Rtf", Direction(-45 * deg, 45 * deg), {}},
        {"Ltb", Direction(135 * deg, 45 * deg), {}},
        {"Rtb", Direction(-135 * deg, 45 * deg), {}},
    };
    return l;
}

}  // namespace

static void BM_IdhoaCostWithGradient(benchmark::State& state) {
    const SpeakerLayout layout = bed704();
    auto mesh = std::make_shared<SubdivisionMesh>(build_mesh(2));
    auto bank = std::make_shared<FilterBank>(make_filter_bank(*mesh, WaveletFamily::vbap));
    const FormatEncoder enc(mesh, bank, 1);
    const auto dirs = enc.default_directions();
    const Eigen::MatrixXd encodings = enc.encode_all(dirs);
    const CostWeights weights = smooth_preset();
    const Eigen::VectorXd mask = mask_weights(layout, dirs, weights);
    const Eigen::MatrixXd gains = Eigen::MatrixXd::Constant(11, 18, 0.1);
    Eigen::MatrixXd grad;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            idhoa_cost(gains, encodings, layout.units(), dirs, mask, weights, &grad));
}
BENCHMARK(BM_IdhoaCostWithGradient);

static void BM_Observables(benchmark::State& state) {
    const SpeakerLayout layout = bed704();
    const FormatEncoder enc(3);
    const DecodingMatrix d = decode_analytic(layout, 3, DecodeMode::pseudoinverse, 1e-9);
    const auto ring = sample_directions(360, SampleScheme::horizontal_ring);
    for (auto _ : state) benchmark::DoNotOptimize(observables(d, enc, layout, ring));
}
BENCHMARK(BM_Observables);
