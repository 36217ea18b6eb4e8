#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ferkit/emotion.hpp"
#include "ferkit/random.hpp"

namespace ferkit {

class DatasetManifest;

/// Inverse-frequency class weights, weight_c = N / n_c, over classes with
/// n_c > 0. Classes with no samples have no entry.
struct ClassWeights {
  std::map<Emotion, double> weight;
  std::map<Emotion, std::size_t> count;
  std::size_t total = 0;

  bool contains(Emotion e) const { return weight.contains(e); }
  double at(Emotion e) const { return weight.at(e); }
};

/// Throws std::invalid_argument when every count is zero.
ClassWeights class_weights(const ClassCounts& counts);

/// Per-sample draw distribution p_i = w_{c(i)} / sum_j w_{c(j)} with an
/// alias table for O(1) draws (Vose's construction).
class WeightedSampler {
 public:
  /// `labels` is the label of each candidate sample, in index order.
  /// Throws std::invalid_argument if a label has no weight or labels is empty.
  WeightedSampler(std::span<const Emotion> labels, const ClassWeights& weights);

  std::size_t size() const noexcept { return probability_.size(); }
  std::span<const double> probabilities() const noexcept { return probability_; }

  /// One index drawn from {p_i}.
  std::size_t draw_one(Rng& rng) const;
  /// k i.i.d. draws with replacement.
  std::vector<std::size_t> draw(std::size_t k, Rng& rng) const;

 private:
  std::vector<double> probability_;
  std::vector<double> accept_;
  std::vector<std::size_t> alias_;
};

/// Sampler over the training split of a manifest with weights computed on
/// that split. Draws are positions into manifest.indices_in(Split::Train).
WeightedSampler build_sampler(const DatasetManifest& manifest, const ClassWeights& weights);

}  // namespace ferkit
