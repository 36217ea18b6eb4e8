#include "ferkit/sampling.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

#include "ferkit/datasets.hpp"

namespace ferkit {

ClassWeights class_weights(const ClassCounts& counts) {
  ClassWeights w;
  for (auto c : counts) w.total += c;
  if (w.total == 0) throw std::invalid_argument("class_weights: all class counts are zero");
  for (auto e : kAllEmotions) {
    const std::size_t n = counts[index_of(e)];
    if (n == 0) continue;
    w.count[e] = n;
    w.weight[e] = static_cast<double>(w.total) / static_cast<double>(n);
  }
  return w;
}

WeightedSampler::WeightedSampler(std::span<const Emotion> labels, const ClassWeights& weights) {
  if (labels.empty()) throw std::invalid_argument("WeightedSampler: no samples");
  const std::size_t n = labels.size();

  // Class mass m_c = w_c * n_c is accumulated per class, so every member of a
  // class gets bit-identical probability m_c / (n_c * sum_c m_c).
  std::map<Emotion, std::size_t> present;
  for (auto e : labels) {
    if (!weights.contains(e)) {
      throw std::invalid_argument("WeightedSampler: no weight for label " + std::string(emotion_name(e)));
    }
    ++present[e];
  }
  std::map<Emotion, double> mass;
  double total_mass = 0.0;
  for (const auto& [e, nc] : present) {
    const double w = weights.at(e);
    if (!(w > 0.0)) throw std::invalid_argument("WeightedSampler: weights must be positive");
    mass[e] = w * static_cast<double>(nc);
    total_mass += mass[e];
  }
  std::map<Emotion, double> per_sample;
  for (const auto& [e, nc] : present) per_sample[e] = mass[e] / total_mass / static_cast<double>(nc);

  probability_.resize(n);
  for (std::size_t i = 0; i < n; ++i) probability_[i] = per_sample[labels[i]];

  // Vose alias table.
  accept_.assign(n, 1.0);
  alias_.resize(n);
  std::iota(alias_.begin(), alias_.end(), std::size_t{0});
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = probability_[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    accept_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (auto i : large) accept_[i] = 1.0;
  for (auto i : small) accept_[i] = 1.0;
}

std::size_t WeightedSampler::draw_one(Rng& rng) const {
  const std::size_t column = rng.below(accept_.size());
  return rng.uniform() < accept_[column] ? column : alias_[column];
}

std::vector<std::size_t> WeightedSampler::draw(std::size_t k, Rng& rng) const {
  std::vector<std::size_t> out(k);
  for (auto& i : out) i = draw_one(rng);
  return out;
}

WeightedSampler build_sampler(const DatasetManifest& manifest, const ClassWeights& weights) {
  std::vector<Emotion> labels;
  for (auto i : manifest.indices_in(Split::Train)) labels.push_back(manifest[i].label);
  return WeightedSampler(labels, weights);
}

}  // namespace ferkit
