#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "ferkit/datasets.hpp"
#include "ferkit/hashing.hpp"
#include "ferkit/random.hpp"

namespace ferkit {

std::string_view variant_name(Variant v) noexcept {
  switch (v) {
    case Variant::Original: return "original";
    case Variant::Aligned: return "aligned";
    case Variant::Cropped: return "cropped";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view s) noexcept {
  if (s == "original") return Variant::Original;
  if (s == "aligned") return Variant::Aligned;
  if (s == "cropped") return Variant::Cropped;
  return std::nullopt;
}

std::string_view split_name(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::Unassigned: return "unassigned";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view s) noexcept {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  if (s == "unassigned") return Split::Unassigned;
  return std::nullopt;
}

std::string ImageSample::group_id() const {
  std::string id(dataset_name(source));
  id += '/';
  id += source_key;
  return id;
}

namespace {

std::string record_key(const ImageSample& s) {
  std::string k = s.group_id();
  k += '#';
  k += variant_name(s.variant);
  return k;
}

}  // namespace

DatasetManifest::DatasetManifest(std::vector<ImageSample> samples, ManifestInfo info)
    : samples_(std::move(samples)), info_(std::move(info)) {
  std::unordered_set<std::string> keys;
  std::unordered_map<std::string, Split> group_split;
  keys.reserve(samples_.size());
  for (const auto& s : samples_) {
    if (!s.pixels.is_canonical()) {
      throw std::invalid_argument("manifest sample " + record_key(s) + " is not 48x48 grayscale");
    }
    if (!keys.insert(record_key(s)).second) {
      throw std::invalid_argument("duplicate manifest record " + record_key(s));
    }
    auto [it, fresh] = group_split.emplace(s.group_id(), s.split);
    if (!fresh && it->second != s.split) {
      throw std::invalid_argument("group " + s.group_id() + " spans two splits");
    }
    ++counts_[index_of(s.label)];
  }
}

ClassCounts DatasetManifest::counts_in(Split split) const {
  ClassCounts c{};
  for (const auto& s : samples_) {
    if (s.split == split) ++c[index_of(s.label)];
  }
  return c;
}

std::vector<std::size_t> DatasetManifest::indices_in(Split split) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i].split == split) idx.push_back(i);
  }
  return idx;
}

std::size_t DatasetManifest::group_count() const {
  std::unordered_set<std::string> groups;
  for (const auto& s : samples_) groups.insert(s.group_id());
  return groups.size();
}

void DatasetManifest::validate() const {
  ClassCounts recount{};
  std::size_t total = 0;
  std::unordered_set<std::string> keys;
  std::unordered_map<std::string, Split> group_split;
  for (const auto& s : samples_) {
    if (!s.pixels.is_canonical()) throw std::logic_error("non-canonical pixels in " + record_key(s));
    if (!keys.insert(record_key(s)).second) throw std::logic_error("duplicate " + record_key(s));
    auto [it, fresh] = group_split.emplace(s.group_id(), s.split);
    if (!fresh && it->second != s.split) throw std::logic_error("split leak in " + s.group_id());
    ++recount[index_of(s.label)];
    ++total;
  }
  if (recount != counts_) throw std::logic_error("stored class counts disagree with records");
  std::size_t sum = 0;
  for (auto c : counts_) sum += c;
  if (sum != total || total != samples_.size()) throw std::logic_error("class counts do not sum to N");
}

std::string DatasetManifest::fingerprint() const {
  Sha256 h;
  h.update("ferkit-manifest-v1\n");
  for (const auto& s : samples_) {
    h.update(record_key(s));
    h.update("|");
    h.update(std::to_string(index_of(s.label)));
    h.update("|");
    h.update(split_name(s.split));
    h.update("|");
    h.update(s.pixels.pixels());
    h.update("\n");
  }
  return h.hex_digest();
}

DatasetManifest DatasetManifest::filter_source(DatasetId source) const {
  std::vector<ImageSample> kept;
  for (const auto& s : samples_) {
    if (s.source == source) kept.push_back(s);
  }
  return DatasetManifest(std::move(kept), info_);
}

ImageSample standardize(const RawRecord& record, const LumaWeights& luma) {
  const auto label = to_emotion(record.label);
  if (!label) {
    throw std::invalid_argument("standardize: record " + record.source_key +
                                " does not carry one of the seven emotion labels");
  }
  if (record.image.empty()) throw std::invalid_argument("standardize: empty image " + record.source_key);
  ImageSample s;
  s.pixels = resize_bilinear(to_grayscale(record.image, luma), kSampleSide, kSampleSide);
  s.label = *label;
  s.source = record.source;
  s.source_key = record.source_key;
  s.variant = Variant::Original;
  s.split = Split::Unassigned;
  return s;
}

DatasetManifest manifest_from_records(std::span<const RawRecord> records) {
  std::vector<ImageSample> samples;
  samples.reserve(records.size());
  for (const auto& r : records) samples.push_back(standardize(r));
  return DatasetManifest(std::move(samples));
}

DatasetManifest merge(std::span<const DatasetManifest> manifests) {
  std::vector<ImageSample> all;
  std::size_t total = 0;
  for (const auto& m : manifests) total += m.size();
  all.reserve(total);
  for (const auto& m : manifests) all.insert(all.end(), m.samples().begin(), m.samples().end());
  ManifestInfo info = manifests.empty() ? ManifestInfo{} : manifests.front().info();
  return DatasetManifest(std::move(all), std::move(info));
}

SplitSizes split_sizes(std::size_t groups, const SplitRatios& r) {
  if (r.train < 0 || r.val < 0 || r.test < 0 || std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");
  }
  // The epsilon absorbs representation error such as 0.8 * 10 = 8.000000000000002
  // or 0.1 * 30 = 3.0000000000000004 while never moving a genuine fraction.
  const auto part = [groups](double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(groups) + 1e-9));
  };
  SplitSizes s;
  s.train = std::min(part(r.train), groups);
  s.val = std::min(part(r.val), groups - s.train);
  s.test = groups - s.train - s.val;
  return s;
}

DatasetManifest split(const DatasetManifest& manifest, const SplitRatios& ratios, std::uint64_t seed) {
  if (manifest.empty()) throw std::invalid_argument("split: empty manifest");

  std::vector<std::string> groups;
  std::unordered_map<std::string, std::size_t> group_index;
  for (const auto& s : manifest.samples()) {
    auto [it, fresh] = group_index.emplace(s.group_id(), groups.size());
    if (fresh) groups.push_back(it->first);
  }
  const SplitSizes sizes = split_sizes(groups.size(), ratios);

  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span(order));

  std::vector<Split> assignment(groups.size(), Split::Test);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    Split s = Split::Test;
    if (rank < sizes.train) {
      s = Split::Train;
    } else if (rank < sizes.train + sizes.val) {
      s = Split::Val;
    }
    assignment[order[rank]] = s;
  }

  std::vector<ImageSample> out = manifest.samples();
  for (auto& s : out) s.split = assignment[group_index.at(s.group_id())];
  ManifestInfo info = manifest.info();
  info.seed = seed;
  return DatasetManifest(std::move(out), std::move(info));
}

}  // namespace ferkit
