// Parallel kernels against their serial references.
//   ./simstack_bench --benchmark_filter=Gradient
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "simstack/optimizer.hpp"

using namespace simstack;

namespace {

ArrayGeometry bench_geometry(int layers) {
    auto g = convergence_geometry(28e9, 0.5, 0.5, 0.5);
    g.layers = layers;
    return g;
}

struct GradientCase {
    SimStack stack;
    ChannelRealization ch;
    PowerAllocation p;
    OptimizerSettings settings;

    explicit GradientCase(int layers, ChannelModel model)
        : stack(build_stack(bench_geometry(layers), MediumProvider{})),
          ch(make_realization(stack.n(), 2, 1, 0, 1.0, 2.0)),
          p(uniform_power(2, 2.0)) {
        settings.model = model;
        stack = stack.with_phases(init_phases(stack, ch, InitMode::random, 3).phi);
    }
};

void BM_GradientLowRank(benchmark::State& state) {
    GradientCase c(static_cast<int>(state.range(0)), ChannelModel::exact_t);
    for (auto _ : state) benchmark::DoNotOptimize(gradient_fd(c.stack, c.ch, c.p, c.settings));
}

void BM_GradientSerial(benchmark::State& state) {
    GradientCase c(static_cast<int>(state.range(0)), ChannelModel::exact_t);
    for (auto _ : state) benchmark::DoNotOptimize(serial::gradient_fd(c.stack, c.ch, c.p, c.settings));
}

void BM_GradientSimplifiedLowRank(benchmark::State& state) {
    GradientCase c(static_cast<int>(state.range(0)), ChannelModel::simplified);
    for (auto _ : state) benchmark::DoNotOptimize(gradient_fd(c.stack, c.ch, c.p, c.settings));
}

void BM_GradientSimplifiedSerial(benchmark::State& state) {
    GradientCase c(static_cast<int>(state.range(0)), ChannelModel::simplified);
    for (auto _ : state) benchmark::DoNotOptimize(serial::gradient_fd(c.stack, c.ch, c.p, c.settings));
}

void BM_DipoleMedium(benchmark::State& state) {
    const auto g = bench_geometry(3);
    for (auto _ : state) benchmark::DoNotOptimize(dipole_medium_between(g, 0, 1));
}

void BM_DipoleMediumSerial(benchmark::State& state) {
    const auto g = bench_geometry(3);
    for (auto _ : state) benchmark::DoNotOptimize(serial::dipole_medium_between(g, 0, 1));
}

}  // namespace

BENCHMARK(BM_GradientLowRank)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientSerial)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientSimplifiedLowRank)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientSimplifiedSerial)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DipoleMedium)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DipoleMediumSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
