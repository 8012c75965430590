#include "quadmap/changedet.hpp"
#include "quadmap/evalx.hpp"
#include "quadmap/postproc.hpp"
#include "quadmap/raster.hpp"
#include "quadmap/rng.hpp"

#include <benchmark/benchmark.h>

using namespace quadmap;

namespace {

GridSpec bench_spec(int size) { return {0.0, size * 1.0, 1.0, size, size}; }

QuadRaster random_raster(std::uint64_t seed, int size) {
    Mt64Stream rng(seed);
    QuadRaster r = QuadRaster::filled(bench_spec(size), 1, 0.0f);
    for (float& v : r.data) {
        v = static_cast<float>(rng.next01());
    }
    return r;
}

void BM_RollingAggregate(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    post::TimeSeriesStack stack;
    for (int q = 0; q < 4; ++q) {
        stack.quarters.push_back(random_raster(q + 1, size));
    }
    post::ClarityRaster clarity;
    clarity.spec = bench_spec(size);
    Mt64Stream rng(99);
    for (int i = 0; i < size * size; ++i) {
        clarity.scores.push_back(static_cast<float>(draw_uniform(rng, 1.0, 4.0)));
    }
    stack.clarity = clarity;
    for (auto _ : state) {
        benchmark::DoNotOptimize(post::rolling_aggregate(stack, post::BandKind::Density));
    }
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_RollingAggregate)->Arg(128)->Arg(512);

void BM_ClarityScore(benchmark::State& state) {
    const int out_size = static_cast<int>(state.range(0));
    const int size = out_size * kPoolFactor;
    post::UdmQuad udm;
    udm.spec = bench_spec(size);
    Mt64Stream rng(7);
    udm.clazz.resize(static_cast<std::size_t>(size) * size);
    udm.confidence.resize(udm.clazz.size());
    for (std::size_t i = 0; i < udm.clazz.size(); ++i) {
        udm.clazz[i] = static_cast<std::uint8_t>(draw_index(rng, 6));
        udm.confidence[i] = static_cast<float>(draw_uniform(rng, 0.0, 100.0));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(post::clarity_score_quad(udm));
    }
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_ClarityScore)->Arg(64)->Arg(512);

void BM_DownsampleAverage(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const QuadRaster r = random_raster(3, size);
    for (auto _ : state) {
        benchmark::DoNotOptimize(downsample_average(r, 8));
    }
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_DownsampleAverage)->Arg(512)->Arg(4096);

void BM_MonotonicityAuc(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    std::vector<QuadRaster> annual;
    for (int y = 0; y < 4; ++y) {
        annual.push_back(random_raster(y + 11, size));
    }
    const auto signals = eval::window_signals(annual, 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(eval::monotonicity_auc(signals, {7, 0.01, 100}));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(signals.size()));
}
BENCHMARK(BM_MonotonicityAuc)->Arg(128)->Arg(512);

void BM_Vectorize(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    Mt64Stream rng(13);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(size) * size);
    for (auto& m : mask) {
        m = rng.next01() < 0.2 ? 1 : 0;
    }
    const GridSpec spec = bench_spec(size);
    for (auto _ : state) {
        benchmark::DoNotOptimize(change::vectorize_8conn(mask, spec));
    }
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_Vectorize)->Arg(128)->Arg(512);

} // namespace

BENCHMARK_MAIN();
