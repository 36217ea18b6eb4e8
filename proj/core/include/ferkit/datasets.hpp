#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ferkit/emotion.hpp"
#include "ferkit/image.hpp"

namespace ferkit {

inline constexpr std::string_view kToolkitVersion = "0.3.0";

enum class Variant : std::uint8_t { Original, Aligned, Cropped };
enum class Split : std::uint8_t { Train, Val, Test, Unassigned };

std::string_view variant_name(Variant v) noexcept;
std::optional<Variant> parse_variant(std::string_view s) noexcept;
std::string_view split_name(Split s) noexcept;
std::optional<Split> parse_split(std::string_view s) noexcept;

/// One image as it came out of a source dataset.
struct RawRecord {
  Image image;
  RawLabel label = RawLabel::Unknown;
  DatasetId source = DatasetId::FerPlus;
  std::string source_key;
};

/// One canonical 48x48 grayscale sample.
struct ImageSample {
  Image pixels;
  Emotion label = Emotion::Angry;
  DatasetId source = DatasetId::FerPlus;
  std::string source_key;
  Variant variant = Variant::Original;
  Split split = Split::Unassigned;

  /// Shared by every variant derived from the same original image.
  std::string group_id() const;
};

/// Provenance carried in the manifest header.
struct ManifestInfo {
  std::string toolkit_version{kToolkitVersion};
  LumaWeights luma;
  std::string resize_method = "bilinear";
  std::optional<std::uint64_t> seed;
};

/// Ordered, validated collection of samples.
///
/// Construction enforces: canonical pixels, unique (source, key, variant),
/// and one split per group. Per-class counts are derived from the records.
class DatasetManifest {
 public:
  DatasetManifest() = default;
  explicit DatasetManifest(std::vector<ImageSample> samples, ManifestInfo info = {});

  const std::vector<ImageSample>& samples() const noexcept { return samples_; }
  const ImageSample& operator[](std::size_t i) const { return samples_[i]; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  const ClassCounts& counts() const noexcept { return counts_; }
  ClassCounts counts_in(Split split) const;
  std::vector<std::size_t> indices_in(Split split) const;
  std::size_t group_count() const;

  const ManifestInfo& info() const noexcept { return info_; }

  /// Re-derives every invariant from the records; throws std::logic_error on
  /// any mismatch.
  void validate() const;

  /// SHA-256 over record metadata and pixel contents.
  std::string fingerprint() const;

  /// Keeps samples whose source is `source` (used for per-dataset views of a
  /// merged manifest).
  DatasetManifest filter_source(DatasetId source) const;

 private:
  std::vector<ImageSample> samples_;
  ClassCounts counts_{};
  ManifestInfo info_;
};

// ---------------------------------------------------------------- loaders

/// Row- or file-level problem that did not abort the load.
struct LoadIssue {
  std::string location;  // "row 17" or a file path
  std::string message;
};

struct LoadReport {
  std::vector<RawRecord> records;
  std::vector<LoadIssue> issues;
};

enum class VotePolicy { Majority };

/// FER+ table with a `pixels` column (2304 space-separated integers) and one
/// vote column per label (neutral, happiness, surprise, sadness, anger,
/// disgust, fear, contempt, unknown, NF). Rows won by contempt, unknown or
/// not-a-face are dropped; ties go to the lowest canonical index.
/// Throws std::runtime_error if the file cannot be read or lacks columns.
LoadReport load_ferplus(const std::filesystem::path& csv_path, VotePolicy policy = VotePolicy::Majority);

/// Majority vote over per-label counts in RawLabel order.
std::optional<RawLabel> majority_vote(std::span<const int> votes);

/// <root>/<emotion>/<image>; the contempt directory is ignored.
LoadReport load_ckplus(const std::filesystem::path& root);

/// Straight and half-profile poses.
inline const std::set<std::string> kKdefDefaultPoses = {"S", "HL", "HR"};

/// KDEF images named <session><gender><id><emotion><pose>.<ext>, e.g.
/// AF01ANS.JPG, searched recursively under root.
LoadReport load_kdef(const std::filesystem::path& root, const std::set<std::string>& pose_filter);

/// Grayscale (fixed luma) + bilinear resize to 48x48. The record must carry
/// one of the seven canonical labels.
ImageSample standardize(const RawRecord& record, const LumaWeights& luma = {});

DatasetManifest manifest_from_records(std::span<const RawRecord> records);

/// Concatenates; throws std::invalid_argument on duplicate
/// (source, source_key, variant).
DatasetManifest merge(std::span<const DatasetManifest> manifests);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

/// Group counts per partition: train and val are floor(ratio * groups), the
/// remainder goes to test.
SplitSizes split_sizes(std::size_t groups, const SplitRatios& ratios);

/// Seeded, group-aware uniform random split. Throws std::invalid_argument if
/// the ratios do not sum to 1 (within 1e-9) or the manifest is empty.
DatasetManifest split(const DatasetManifest& manifest, const SplitRatios& ratios, std::uint64_t seed);

struct SynthOptions {
  /// Odd domains draw the patterns with inverted polarity, giving a second
  /// "dataset" with a controlled distribution shift.
  int domain = 0;
  double noise_sigma = 20.0;
  DatasetId source = DatasetId::Synthetic;
};

/// 7 * n_per_class procedurally generated samples: an oriented grating per
/// class plus seeded Gaussian noise.
DatasetManifest synth_generate(int n_per_class, std::uint64_t seed, const SynthOptions& options = {});

// ------------------------------------------------------------- manifest I/O

/// Writes the manifest text file and stores each sample's pixels as a PNG
/// under <manifest dir>/pixels/<hh>/<sha256>.png.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& manifest_path);
DatasetManifest load_manifest(const std::filesystem::path& manifest_path);

/// Digest of the raw pixel bytes; names the pixel file.
std::string pixel_digest(const Image& img);

}  // namespace ferkit
