#include "homsim/correlator.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

using namespace homsim;

namespace {

std::vector<Timestamp> poisson(double rate_hz, Timestamp span_ps, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gap(rate_hz / kPicosecondsPerSecond);
    std::vector<Timestamp> s;
    for (double t = gap(rng); t < static_cast<double>(span_ps); t += gap(rng)) s.push_back(static_cast<Timestamp>(t));
    return s;
}

void BM_cross(benchmark::State& state) {
    const double rate = static_cast<double>(state.range(0));
    const auto a = poisson(rate, 1'000'000'000'000, 1), b = poisson(rate, 1'000'000'000'000, 2);
    for (auto _ : state) benchmark::DoNotOptimize(correlator::cross_correlate(a, b, 10, 2000));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * (a.size() + b.size())));
}
BENCHMARK(BM_cross)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_cross_wide(benchmark::State& state) {
    const auto a = poisson(1e6, 1'000'000'000'000, 3), b = poisson(1e6, 1'000'000'000'000, 4);
    for (auto _ : state) benchmark::DoNotOptimize(correlator::cross_correlate(a, b, 1000, 500'000));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * (a.size() + b.size())));
}
BENCHMARK(BM_cross_wide)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
