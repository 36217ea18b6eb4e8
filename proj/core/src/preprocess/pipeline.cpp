#include <algorithm>

#include <spdlog/spdlog.h>

#include "ferkit/preprocess.hpp"

namespace ferkit {

void populate_cache(const DatasetManifest& manifest, FaceDetector* detector, DetectionCache& cache) {
  for (const auto& s : manifest.samples()) {
    if (s.variant != Variant::Original) continue;
    (void)detect(detector, cache, s);
  }
}

PreprocessOutputs preprocess_variants(const DatasetManifest& manifest, const DetectionCache& cache, MaskSize mask) {
  std::vector<ImageSample> aligned, cropped;
  std::vector<Discard> discarded;
  for (const auto& s : manifest.samples()) {
    if (s.variant != Variant::Original) continue;
    const auto* hit = cache.find(detection_key(s));
    if (hit == nullptr) throw DetectorError("no cached detection for " + s.group_id());
    if (!hit->has_value()) {
      discarded.push_back({s.group_id(), Variant::Aligned, "no face detected"});
      discarded.push_back({s.group_id(), Variant::Cropped, "no face detected"});
      continue;
    }
    auto a = align(s, **hit);
    if (!a) {
      spdlog::info("discarding {}: bounding box has zero area after clipping", s.group_id());
      discarded.push_back({s.group_id(), Variant::Aligned, "degenerate bounding box"});
      discarded.push_back({s.group_id(), Variant::Cropped, "degenerate bounding box"});
      continue;
    }
    if (a->landmarks) {
      cropped.push_back(landmark_mask(a->sample, *a->landmarks, mask));
    } else {
      spdlog::info("discarding cropped variant of {}: landmarks missing", s.group_id());
      discarded.push_back({s.group_id(), Variant::Cropped, "landmarks missing"});
    }
    aligned.push_back(std::move(a->sample));
  }
  return {DatasetManifest(std::move(aligned), manifest.info()), DatasetManifest(std::move(cropped), manifest.info()),
          std::move(discarded)};
}

DatasetManifest build_augmented_merged(const DatasetManifest& manifest, const DetectionCache& cache, MaskSize mask,
                                       std::uint64_t split_seed) {
  auto variants = preprocess_variants(manifest, cache, mask);

  std::vector<ImageSample> all;
  bool unsplit = false;
  for (const auto& s : manifest.samples()) {
    if (s.variant != Variant::Original) continue;
    unsplit = unsplit || s.split == Split::Unassigned;
    all.push_back(s);
  }
  all.insert(all.end(), variants.aligned.samples().begin(), variants.aligned.samples().end());
  all.insert(all.end(), variants.cropped.samples().begin(), variants.cropped.samples().end());
  // Keep the three variants of one group adjacent: original, aligned, cropped.
  std::vector<std::size_t> group_rank;
  {
    std::map<std::string, std::size_t> first_seen;
    for (const auto& s : all) first_seen.emplace(s.group_id(), first_seen.size());
    group_rank.reserve(all.size());
    for (const auto& s : all) group_rank.push_back(first_seen.at(s.group_id()));
  }
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (group_rank[a] != group_rank[b]) return group_rank[a] < group_rank[b];
    return all[a].variant < all[b].variant;
  });
  std::vector<ImageSample> ordered;
  ordered.reserve(all.size());
  for (auto i : order) ordered.push_back(std::move(all[i]));

  if (unsplit) {
    for (auto& s : ordered) s.split = Split::Unassigned;
    return split(DatasetManifest(std::move(ordered), manifest.info()), SplitRatios{}, split_seed);
  }
  return DatasetManifest(std::move(ordered), manifest.info());
}

}  // namespace ferkit
