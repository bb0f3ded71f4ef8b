#include <benchmark/benchmark.h>

#include <random>

#include "histoclahe/clahe.hpp"
#include "histoclahe/layers.hpp"
#include "histoclahe/network.hpp"

using namespace histoclahe;

namespace {

Raster noise_raster(int side) {
  std::mt19937_64 rng(1);
  Raster r(side, side);
  for (auto& p : r.pixels) p = static_cast<std::uint8_t>(rng() % 256);
  return r;
}

Tensor noise_tensor(Shape shape) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

void BM_Clahe(benchmark::State& state) {
  const Raster r = noise_raster(static_cast<int>(state.range(0)));
  const ExecutionOptions exec{static_cast<unsigned>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(clahe(r, ClaheParams{8, 8, 2.0}, exec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.size()));
}
BENCHMARK(BM_Clahe)->Args({64, 1})->Args({512, 1})->Args({512, 4})->Unit(benchmark::kMicrosecond);

void BM_GlobalEqualize(benchmark::State& state) {
  const Raster r = noise_raster(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(equalize(r));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.size()));
}
BENCHMARK(BM_GlobalEqualize)->Arg(512)->Unit(benchmark::kMicrosecond);

void BM_Conv2dForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor input = noise_tensor({c, 32, 32});
  const Tensor kernels = noise_tensor({c, c, 3, 3});
  const Tensor bias = noise_tensor({c});
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(input, kernels, bias));
}
BENCHMARK(BM_Conv2dForward)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_TinyVggStep(benchmark::State& state) {
  const Network net = Network::he_uniform(tiny_vgg(3));
  const Tensor input = noise_tensor({1, 32, 32});
  for (auto _ : state) benchmark::DoNotOptimize(net.loss_and_gradient(input, 1));
}
BENCHMARK(BM_TinyVggStep)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
