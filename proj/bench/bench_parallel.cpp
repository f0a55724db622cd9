// Serial reference vs OpenMP kernels. On a single core the parallel
// variants only show their scheduling overhead.

#include <benchmark/benchmark.h>

#include "tcm/analytics.hpp"
#include "tcm/iphc_codec.hpp"
#include "tcm/traffic_model.hpp"

using namespace tcm;

namespace {

void BM_GenerateSerial(benchmark::State& state)
{
    const auto g = wow_profile();
    for (auto _ : state)
        benchmark::DoNotOptimize(
            generate_scenario_serial(g, Direction::ClientToServer, std::uint32_t(state.range(0)), 2000, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0) * 2000);
}

void BM_GenerateParallel(benchmark::State& state)
{
    const auto g = wow_profile();
    for (auto _ : state)
        benchmark::DoNotOptimize(generate_scenario(g, Direction::ClientToServer, std::uint32_t(state.range(0)), 2000, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0) * 2000);
}

void BM_CompressSerial(benchmark::State& state)
{
    const auto pkts = generate_scenario(wow_profile(), Direction::ServerToClient, std::uint32_t(state.range(0)), 2000, 2);
    for (auto _ : state) {
        Compressor c;
        benchmark::DoNotOptimize(compress_stream_serial(pkts, c));
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(pkts.size()));
}

void BM_CompressParallel(benchmark::State& state)
{
    const auto pkts = generate_scenario(wow_profile(), Direction::ServerToClient, std::uint32_t(state.range(0)), 2000, 2);
    for (auto _ : state) {
        Compressor c;
        benchmark::DoNotOptimize(compress_stream(pkts, c));
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(pkts.size()));
}

SweepSpec small_grid()
{
    SweepSpec spec;
    spec.profile = wow_profile();
    spec.players = {5, 20, 50};
    spec.periods_us = {10'000, 40'000, 70'000, 100'000};
    spec.packets_per_player = 1000;
    return spec;
}

void BM_SweepSerial(benchmark::State& state)
{
    const auto spec = small_grid();
    for (auto _ : state) benchmark::DoNotOptimize(sweep_serial(spec));
}

void BM_SweepParallel(benchmark::State& state)
{
    const auto spec = small_grid();
    for (auto _ : state) benchmark::DoNotOptimize(sweep(spec));
}

} // namespace

BENCHMARK(BM_GenerateSerial)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GenerateParallel)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CompressSerial)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CompressParallel)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
