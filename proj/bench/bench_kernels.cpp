// Serial reference vs OpenMP timings for the data-parallel kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "rppg/kernels.hpp"

using namespace rppg;

namespace {

GrayFrame random_gray(int w, int h) {
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> d(0, 255);
  GrayFrame g(w, h);
  for (auto& v : g.data) v = static_cast<std::uint8_t>(d(rng));
  return g;
}

VideoClip random_clip(int w, int h, int frames) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<float> d(1.0f, 255.0f);
  VideoClip clip{w, h, 30.0, {}};
  for (int f = 0; f < frames; ++f) {
    RgbFrame fr(w, h);
    for (auto& v : fr.data) v = d(rng);
    clip.frames.push_back(std::move(fr));
  }
  return clip;
}

Cascade toy_cascade() {
  CascadeTree a;
  a.feature = {{{0, 0, 24, 12}, -1.0}, {{0, 12, 24, 12}, 1.0}};
  a.threshold = 0.1;
  a.pass_value = 1.0;
  CascadeTree b;
  b.feature = {{{0, 0, 8, 24}, 1.0}, {{8, 0, 8, 24}, -2.0}, {{16, 0, 8, 24}, 1.0}};
  b.threshold = -0.1;
  b.pass_value = 1.0;
  return {24, 24, {{0.5, {a, b}}, {0.5, {b}}}};
}

template <Exec E>
void BM_IntegralImages(benchmark::State& state) {
  const auto g = random_gray(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 3 / 4);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::integral_images(g, E));
}

template <Exec E>
void BM_ScanScale(benchmark::State& state) {
  const auto c = toy_cascade();
  const auto ii = kernels::serial::integral_images(random_gray(640, 480));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::scan_scale(c, ii, 2.0, 48, 48, 2, E));
}

template <Exec E>
void BM_FrameUnitSums(benchmark::State& state) {
  const auto clip = random_clip(160, 120, static_cast<int>(state.range(0)));
  const std::vector<Rect> rois(clip.size(), Rect{40, 30, 80, 60});
  for (auto _ : state) benchmark::DoNotOptimize(kernels::frame_unit_sums(clip, rois, E));
}

template <Exec E>
void BM_FrameGraySums(benchmark::State& state) {
  const auto clip = random_clip(160, 120, static_cast<int>(state.range(0)));
  const std::vector<Rect> rois(clip.size(), Rect{0, 60, 160, 60});
  for (auto _ : state) benchmark::DoNotOptimize(kernels::frame_gray_sums(clip, rois, E));
}

}  // namespace

BENCHMARK(BM_IntegralImages<Exec::serial>)->Arg(320)->Arg(1280);
BENCHMARK(BM_IntegralImages<Exec::parallel>)->Arg(320)->Arg(1280);
BENCHMARK(BM_ScanScale<Exec::serial>);
BENCHMARK(BM_ScanScale<Exec::parallel>);
BENCHMARK(BM_FrameUnitSums<Exec::serial>)->Arg(300);
BENCHMARK(BM_FrameUnitSums<Exec::parallel>)->Arg(300);
BENCHMARK(BM_FrameGraySums<Exec::serial>)->Arg(300);
BENCHMARK(BM_FrameGraySums<Exec::parallel>)->Arg(300);

BENCHMARK_MAIN();
