// Microbenchmarks for the hot kernels: morphology, convolution, Otsu, and
// the end-to-end classical baseline.

#include <benchmark/benchmark.h>

#include "carbideseg/classical.hpp"
#include "carbideseg/layers.hpp"
#include "carbideseg/rng.hpp"
#include "carbideseg/synthdata.hpp"

using namespace carbideseg;

namespace {

Image2D random_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    Image2D img(w, h);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

void bm_gaussian_blur(benchmark::State& state) {
    Image2D img = random_image(512, 512, 1);
    for (auto _ : state) benchmark::DoNotOptimize(gaussian_blur(img, 1.0));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.size()));
}
BENCHMARK(bm_gaussian_blur);

void bm_erode_disk(benchmark::State& state) {
    Image2D img = random_image(512, 512, 2);
    const int radius = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(erode(img, radius));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.size()));
}
BENCHMARK(bm_erode_disk)->Arg(5)->Arg(15)->Arg(30);

void bm_white_tophat(benchmark::State& state) {
    Image2D img = random_image(512, 512, 3);
    for (auto _ : state) benchmark::DoNotOptimize(white_tophat(img, 30));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.size()));
}
BENCHMARK(bm_white_tophat);

void bm_otsu(benchmark::State& state) {
    Image2D img = random_image(512, 512, 4);
    for (auto _ : state) benchmark::DoNotOptimize(otsu_threshold(img));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.size()));
}
BENCHMARK(bm_otsu);

void bm_conv2d(benchmark::State& state) {
    Rng rng(5);
    net::Tensor4<float> in(1, 8, 128, 128), w(8, 8, 3, 3);
    for (auto& v : in.data) v = static_cast<float>(rng.normal());
    for (auto& v : w.data) v = static_cast<float>(rng.normal() * 0.1);
    std::vector<float> bias(8, 0.1f);
    for (auto _ : state) benchmark::DoNotOptimize(net::conv2d_forward(in, w, bias));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(in.data.size()) * 8 * 9);
}
BENCHMARK(bm_conv2d);

void bm_baseline_segment(benchmark::State& state) {
    SceneConfig cfg;
    cfg.width = 256;
    cfg.height = 256;
    cfg.seed = 6;
    Scene s = generate_scene(cfg);
    for (auto _ : state) benchmark::DoNotOptimize(baseline_segment(s.channels));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(s.channels.se.size()));
}
BENCHMARK(bm_baseline_segment);

} // namespace

BENCHMARK_MAIN();
