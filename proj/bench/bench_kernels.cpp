#include "droplet/coulomb.hpp"
#include "droplet/grid.hpp"
#include "droplet/reference.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace droplet;

namespace {

ScalarField disk_density(const Grid& g) {
    return ScalarField::sample(g, [](const Point& x) { return x[0] * x[0] + x[1] * x[1] <= 1.0 ? 1.0 / M_PI : 0.0; });
}

void BM_ConvolveFFT(benchmark::State& state) {
    const Grid g(2, static_cast<int>(state.range(0)), 2.0);
    Convolver conv(make_kernel(g));
    const ScalarField rho = disk_density(g);
    std::vector<double> out(g.size());
    for (auto _ : state) {
        conv.apply(rho.values(), out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_ConvolveFFT)->Arg(32)->Arg(64)->Arg(128)->Arg(256);

void BM_ConvolveDirect(benchmark::State& state) {
    const Grid g(2, static_cast<int>(state.range(0)), 2.0);
    const KernelTable kernel(g);
    const ScalarField rho = disk_density(g);
    for (auto _ : state) benchmark::DoNotOptimize(reference::direct_potential(rho, kernel));
}
BENCHMARK(BM_ConvolveDirect)->Arg(32)->Arg(64);

void BM_LaplacianParallel(benchmark::State& state) {
    const Grid g(2, static_cast<int>(state.range(0)), 2.0);
    const ScalarField f = ScalarField::sample(g, [](const Point& x) { return std::sin(x[0]) * std::cos(x[1]); });
    for (auto _ : state) benchmark::DoNotOptimize(laplacian(f));
}
BENCHMARK(BM_LaplacianParallel)->Arg(256)->Arg(1024);

void BM_LaplacianSerial(benchmark::State& state) {
    const Grid g(2, static_cast<int>(state.range(0)), 2.0);
    const ScalarField f = ScalarField::sample(g, [](const Point& x) { return std::sin(x[0]) * std::cos(x[1]); });
    for (auto _ : state) benchmark::DoNotOptimize(reference::laplacian_serial(f));
}
BENCHMARK(BM_LaplacianSerial)->Arg(256)->Arg(1024);

} // namespace

BENCHMARK_MAIN();
