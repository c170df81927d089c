#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "worldsmith/compositor.hpp"
#include "worldsmith/geometry.hpp"
#include "worldsmith/mock_backend.hpp"
#include "worldsmith/segmentation.hpp"
#include "worldsmith/session.hpp"

using namespace worldsmith;

namespace {

std::vector<Point> random_points(std::size_t n, int extent, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> d(0, extent - 1);
    std::vector<Point> pts(n);
    for (auto& p : pts) p = {d(rng), d(rng)};
    return pts;
}

void BM_ConvexHull(benchmark::State& state) {
    const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 4096, 7);
    for (auto _ : state) benchmark::DoNotOptimize(convex_hull(pts));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConvexHull)->RangeMultiplier(8)->Range(64, 32768)->Complexity();

void BM_RasterizeHull512(benchmark::State& state) {
    const auto pts = random_points(200, 512, 11);
    for (auto _ : state) benchmark::DoNotOptimize(rasterize_hull(pts, {512, 512}));
}
BENCHMARK(BM_RasterizeHull512);

void BM_RasterizeLasso512(benchmark::State& state) {
    const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 512, 13);
    for (auto _ : state) benchmark::DoNotOptimize(rasterize_lasso(pts, {512, 512}));
}
BENCHMARK(BM_RasterizeLasso512)->Arg(16)->Arg(256);

void BM_PencilStroke512(benchmark::State& state) {
    const std::vector<std::vector<Point>> strokes{random_points(64, 512, 17)};
    for (auto _ : state) benchmark::DoNotOptimize(rasterize_pencil(strokes, static_cast<int>(state.range(0)), {512, 512}));
}
BENCHMARK(BM_PencilStroke512)->Arg(4)->Arg(32);

void BM_GaussianBlur(benchmark::State& state) {
    const int edge = static_cast<int>(state.range(0));
    Plane p({edge, edge}, 0.0f);
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> d(0.0f, 1.0f);
    for (auto& v : p.values()) v = d(rng);
    const double sigma = static_cast<double>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(gaussian_blur(p, sigma));
}
BENCHMARK(BM_GaussianBlur)->Args({512, 8})->Args({1024, 8})->Args({1024, 32});

void BM_ComposeExtract(benchmark::State& state) {
    std::vector<RegionSpec> regions;
    for (int i = 0; i < 6; ++i) {
        RegionSpec r;
        r.region_id = "r" + std::to_string(i);
        r.color = region_palette()[static_cast<std::size_t>(i)];
        r.geometry.push_back({BrushKind::hull, random_points(40, 512, 100 + static_cast<std::uint64_t>(i)), 1});
        regions.push_back(std::move(r));
    }
    for (auto _ : state) benchmark::DoNotOptimize(extract_binary_masks(compose_segmentation(regions, {512, 512})));
}
BENCHMARK(BM_ComposeExtract);

void BM_MockGenerate(benchmark::State& state) {
    GenerationRequest r;
    r.prompt = "a volcanic island";
    r.count = 1;
    r.resolution = {512, 512};
    for (auto _ : state) benchmark::DoNotOptimize(mock_generate(r));
}
BENCHMARK(BM_MockGenerate);

void BM_BlendPlanDefaultSession(benchmark::State& state) {
    auto s = create_session(SessionConfig{}, "bench", 0);
    const Image tile = Image::rgb(512, 512, {40, 90, 160});
    ImageLookup lookup = [&](const ImageRef&) -> std::optional<Image> { return tile; };
    for (auto& t : s.tiles) t.current_image = ImageRef{"x", 512, 512};
    for (auto _ : state) benchmark::DoNotOptimize(make_blend_plan(s, lookup));
}
BENCHMARK(BM_BlendPlanDefaultSession);

}  // namespace
BENCHMARK_MAIN();
