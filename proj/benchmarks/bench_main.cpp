#include <benchmark/benchmark.h>

#include <chrono>
#include <random>
#include <vector>

#include "trafficpm/aggregation.hpp"
#include "trafficpm/analysis.hpp"
#include "trafficpm/detection.hpp"
#include "trafficpm/evaluation.hpp"
#include "trafficpm/imaging.hpp"
#include "trafficpm/time.hpp"

using namespace trafficpm;
using detection::BoundingBox;
using detection::Detection;

namespace {

std::vector<Detection> random_detections(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Detection> out;
    for (std::size_t i = 0; i < n; ++i) {
        BoundingBox b{u(rng) * 600, u(rng) * 440, 10 + u(rng) * 80, 10 + u(rng) * 60};
        out.push_back({b, detection::kAllLabels[rng() % 3], u(rng)});
    }
    return out;
}

void BM_Iou(benchmark::State& state) {
    auto d = random_detections(1024, 1);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(detection::iou(d[i % 1024].bbox, d[(i * 7 + 3) % 1024].bbox));
        ++i;
    }
}
BENCHMARK(BM_Iou);

void BM_FilterPipeline(benchmark::State& state) {
    auto d = random_detections(static_cast<std::size_t>(state.range(0)), 2);
    detection::FilterConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(detection::run_filter_pipeline(d, cfg, 640, 480));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FilterPipeline)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_MatchDetections(benchmark::State& state) {
    auto pred = random_detections(static_cast<std::size_t>(state.range(0)), 3);
    std::vector<evaluation::GroundTruthBox> gt;
    for (const auto& p : random_detections(static_cast<std::size_t>(state.range(0)), 4)) gt.push_back({p.bbox, p.label});
    for (auto _ : state) benchmark::DoNotOptimize(evaluation::match_detections(gt, pred, 0.5));
}
BENCHMARK(BM_MatchDetections)->RangeMultiplier(4)->Range(16, 256);

void BM_Pearson(benchmark::State& state) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0, 1);
    std::vector<double> x(static_cast<std::size_t>(state.range(0))), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = g(rng);
        y[i] = 0.5 * x[i] + g(rng);
    }
    for (auto _ : state) benchmark::DoNotOptimize(analysis::pearson(x, y));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Pearson)->Range(8, 1 << 16);

void BM_MaskRaster(benchmark::State& state) {
    Raster r(640, 480);
    std::vector<imaging::Point> poly{{0, 300}, {250, 120}, {390, 120}, {640, 300}, {640, 480}, {0, 480}};
    for (auto _ : state) benchmark::DoNotOptimize(imaging::mask_raster(r, poly));
    state.SetItemsProcessed(state.iterations() * 640 * 480);
}
BENCHMARK(BM_MaskRaster);

void BM_BinPm(benchmark::State& state) {
    const auto t0 = parse_timestamp("2022-02-24T00:00:00Z");
    std::vector<aggregation::PmSample> s(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i].location = aggregation::Location::L1;
        s[i].timestamp = t0 + std::chrono::seconds{static_cast<long>(i)};
        s[i].pm1 = 5 + static_cast<double>(i % 17);
        s[i].rh = 50;
    }
    for (auto _ : state) benchmark::DoNotOptimize(aggregation::bin_pm(s, std::chrono::seconds{300}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BinPm)->Arg(3600)->Arg(86400);

}  // namespace

BENCHMARK_MAIN();
