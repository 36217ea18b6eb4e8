#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "ferkit/datasets.hpp"
#include "ferkit/random.hpp"

namespace ferkit {

namespace {

constexpr double kPeriod = 9.0;
constexpr double kAmplitude = 70.0;

double base_pattern(std::size_t label, int x, int y) {
  const double theta = std::numbers::pi * static_cast<double>(label) / kNumEmotions;
  const double c = kSampleSide / 2.0 - 0.5;
  const double t = (x - c) * std::cos(theta) + (y - c) * std::sin(theta);
  return 128.0 + kAmplitude * std::sin(2.0 * std::numbers::pi * t / kPeriod);
}

}  // namespace

DatasetManifest synth_generate(int n_per_class, std::uint64_t seed, const SynthOptions& options) {
  if (n_per_class < 1) throw std::invalid_argument("synth_generate: n_per_class must be >= 1");
  std::vector<ImageSample> samples;
  samples.reserve(kNumEmotions * static_cast<std::size_t>(n_per_class));
  for (std::size_t label = 0; label < kNumEmotions; ++label) {
    for (int i = 0; i < n_per_class; ++i) {
      Rng rng = Rng::derive(seed, {static_cast<std::uint64_t>(options.domain), label,
                                   static_cast<std::uint64_t>(i)});
      ImageSample s;
      s.pixels = Image(kSampleSide, kSampleSide, 1);
      for (int y = 0; y < kSampleSide; ++y) {
        for (int x = 0; x < kSampleSide; ++x) {
          double v = base_pattern(label, x, y);
          if (options.domain % 2 != 0) v = 255.0 - v;
          s.pixels.at(x, y) = saturate_u8(v + options.noise_sigma * rng.normal());
        }
      }
      s.label = static_cast<Emotion>(label);
      s.source = options.source;
      char key[48];
      std::snprintf(key, sizeof key, "synth-d%d-c%zu-%05d", options.domain, label, i);
      s.source_key = key;
      samples.push_back(std::move(s));
    }
  }
  ManifestInfo info;
  info.seed = seed;
  return DatasetManifest(std::move(samples), std::move(info));
}

}  // namespace ferkit
