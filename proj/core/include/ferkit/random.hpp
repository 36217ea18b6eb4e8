#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace ferkit {

/// Seeded generator with platform-independent derived distributions.
/// std::*_distribution are implementation-defined, so the few we need are
/// written out here to keep seeded streams identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for (seed, k0, k1, ...). Used for counter-based
  /// per-epoch / per-sample streams.
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> counters);

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  bool coin() { return (next() >> 63) != 0; }
  /// Standard normal via Box-Muller.
  double normal();

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace ferkit
