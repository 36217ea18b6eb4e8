#include <benchmark/benchmark.h>

#include "ferkit/nn/models.hpp"
#include "ferkit/nn/ops.hpp"
#include "ferkit/random.hpp"

namespace {

using ferkit::nn::Tensor;

Tensor filled(ferkit::nn::Shape shape, std::uint64_t seed) {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d);
  std::vector<float> v(n);
  ferkit::Rng rng(seed);
  for (auto& x : v) x = static_cast<float>(rng.uniform() - 0.5);
  return Tensor::from(std::move(shape), std::move(v));
}

void BM_Conv3x3(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const auto x = filled({16, c, 12, 12}, 1);
  const auto w = filled({c, c, 3, 3}, 2);
  ferkit::nn::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ferkit::nn::conv2d(x, w, Tensor(), {.padding = 1}));
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_Conv3x3)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ModelForward(benchmark::State& state) {
  const auto arch = static_cast<ferkit::nn::Architecture>(state.range(0));
  auto model = ferkit::nn::build_model({arch, 7, false, 0.25, 0});
  const auto x = filled({8, 1, 48, 48}, 3);
  ferkit::nn::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model->forward(x, false));
  state.SetLabel(std::string(ferkit::nn::architecture_name(arch)));
}
BENCHMARK(BM_ModelForward)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);

}  // namespace
