#include <benchmark/benchmark.h>

#include <random>

#include "dociiw/ad/ops.hpp"
#include "dociiw/ad/tape.hpp"
#include "dociiw/metrics.hpp"
#include "dociiw/rng.hpp"
#include "dociiw/synth.hpp"

using namespace dociiw;

namespace {

ad::Tensor random_tensor(ad::Shape s, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  ad::Tensor t = ad::Tensor::zeros(std::move(s));
  for (float& v : t.data) v = u(eng);
  return t;
}

LinearImage random_image(int n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> d(static_cast<std::size_t>(n) * n * 3);
  for (float& v : d) v = u(eng);
  return LinearImage(n, n, std::move(d));
}

void BM_conv2d_forward_backward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto x = random_tensor(ad::Shape{8, n, n}, 1);
  const auto w = random_tensor(ad::Shape{8, 8, 3, 3}, 2);
  const auto b = random_tensor(ad::Shape{8}, 3);
  for (auto _ : state) {
    ad::Tape tape;
    auto y = ad::conv2d(tape.variable(x), tape.variable(w), tape.variable(b));
    tape.backward(ad::sum(y));
    benchmark::DoNotOptimize(tape.size());
  }
}
BENCHMARK(BM_conv2d_forward_backward)->Arg(32)->Arg(64);

void BM_ms_ssim(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_image(n, 4), b = random_image(n, 5);
  const int levels = metrics::ms_ssim_levels(a.extent());
  for (auto _ : state) benchmark::DoNotOptimize(metrics::ms_ssim(a, b, levels));
}
BENCHMARK(BM_ms_ssim)->Arg(64)->Arg(256);

void BM_synth_sample(benchmark::State& state) {
  synth::SynthesisParams p;
  p.width = p.height = static_cast<int>(state.range(0));
  Rng tex_rng = Rng::derive(9, 0);
  const auto tex = synth::gen_text_texture(tex_rng, p).image;
  std::uint64_t i = 0;
  for (auto _ : state) {
    Rng rng = Rng::derive(9, ++i);
    benchmark::DoNotOptimize(synth::synth_sample(tex, p, rng));
  }
}
BENCHMARK(BM_synth_sample)->Arg(64)->Arg(128);

}  // namespace
BENCHMARK_MAIN();
