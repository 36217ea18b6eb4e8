#include <benchmark/benchmark.h>

#include "ferkit/augment.hpp"

namespace {

ferkit::Image face() {
  ferkit::Image img(ferkit::kSampleSide, ferkit::kSampleSide);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) img.at(x, y) = static_cast<std::uint8_t>((x * 5 + y * 3) % 256);
  return img;
}

void BM_RandAugment(benchmark::State& state) {
  const auto img = face();
  ferkit::AugmentPolicy policy;
  policy.magnitude = static_cast<int>(state.range(0));
  ferkit::Rng rng(11);
  for (auto _ : state) benchmark::DoNotOptimize(ferkit::rand_augment(img, policy, rng));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RandAugment)->Arg(5)->Arg(9)->Arg(20);

}  // namespace
