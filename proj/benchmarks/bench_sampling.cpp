#include <benchmark/benchmark.h>

#include "ferkit/sampling.hpp"

namespace {

void BM_SamplerDraw(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<ferkit::Emotion> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = ferkit::kAllEmotions[(i * i) % 7];
  ferkit::ClassCounts counts{};
  for (auto e : labels) ++counts[ferkit::index_of(e)];
  const ferkit::WeightedSampler sampler(labels, ferkit::class_weights(counts));
  ferkit::Rng rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.draw(1024, rng));
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_SamplerDraw)->Arg(1000)->Arg(31307);

void BM_SamplerBuild(benchmark::State& state) {
  std::vector<ferkit::Emotion> labels(31307);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = ferkit::kAllEmotions[i % 7];
  ferkit::ClassCounts counts{};
  for (auto e : labels) ++counts[ferkit::index_of(e)];
  const auto w = ferkit::class_weights(counts);
  for (auto _ : state) benchmark::DoNotOptimize(ferkit::WeightedSampler(labels, w));
}
BENCHMARK(BM_SamplerBuild);

}  // namespace
