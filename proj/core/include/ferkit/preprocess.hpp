#pragma once

#include <array>
#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ferkit/datasets.hpp"
#include "ferkit/image.hpp"

namespace ferkit {

/// Five fiducial points in pixel coordinates of the image they were found in.
/// "Right" and "left" are the subject's.
struct LandmarkSet {
  Point2 right_eye;
  Point2 left_eye;
  Point2 nose;
  Point2 mouth_right;
  Point2 mouth_left;

  std::array<Point2, 5> points() const { return {right_eye, left_eye, nose, mouth_right, mouth_left}; }
  static LandmarkSet from_points(const std::array<Point2, 5>& p) { return {p[0], p[1], p[2], p[3], p[4]}; }
  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;
};

struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct FaceDetection {
  BoundingBox box;
  std::optional<LandmarkSet> landmarks;
  double confidence = 1.0;
  friend bool operator==(const FaceDetection&, const FaceDetection&) = default;
};

struct DetectionKey {
  DatasetId source = DatasetId::FerPlus;
  std::string source_key;
  auto operator<=>(const DetectionKey&) const = default;
};

inline DetectionKey detection_key(const ImageSample& s) { return {s.source, s.source_key}; }

/// Detector adapter failed (process, I/O, or no detector available for a
/// cache miss). Distinct from "no face": callers may retry.
class DetectorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------ sidecar format
//
//   source,source_key,ok,x,y,w,h,confidence[,rex,rey,lex,ley,nx,ny,mrx,mry,mlx,mly]
//   source,source_key,none
//
// Reals use the shortest round-trip representation, so replaying a sidecar
// reproduces detections bit for bit.

struct SidecarEntry {
  DetectionKey key;
  std::optional<FaceDetection> detection;
};

std::string format_sidecar_line(const DetectionKey& key, const std::optional<FaceDetection>& detection);
/// Throws std::invalid_argument on malformed lines or invalid detections.
SidecarEntry parse_sidecar_line(std::string_view line);

/// Persisted map from (source, source_key) to detection-or-none.
class DetectionCache {
 public:
  /// nullptr when the key was never detected; otherwise the stored result
  /// (which may itself be "no face").
  const std::optional<FaceDetection>* find(const DetectionKey& key) const;
  void store(const DetectionKey& key, std::optional<FaceDetection> detection);
  std::size_t size() const noexcept { return entries_.size(); }

  static DetectionCache load(const std::filesystem::path& path);
  /// Sorted by key, so equal caches produce identical files.
  void save(const std::filesystem::path& path) const;

 private:
  std::map<DetectionKey, std::optional<FaceDetection>> entries_;
};

// ------------------------------------------------------------------ adapters

/// Contract: a pure function of the pixels, returning at most one (the best)
/// face. Implementations throw DetectorError on adapter failure.
class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  virtual std::optional<FaceDetection> detect(const DetectionKey& key, const Image& image) = 0;
  /// True if detect() may be called from several threads at once.
  virtual bool reentrant() const noexcept { return false; }
};

/// Replays detections from a golden sidecar file.
class FixtureDetector final : public FaceDetector {
 public:
  struct Options {
    /// Report "no face" for images whose pixels are all zero.
    bool reject_blank = false;
  };

  explicit FixtureDetector(const std::filesystem::path& golden_path);
  FixtureDetector(const std::filesystem::path& golden_path, Options options);
  explicit FixtureDetector(std::vector<SidecarEntry> golden);
  FixtureDetector(std::vector<SidecarEntry> golden, Options options);

  std::optional<FaceDetection> detect(const DetectionKey& key, const Image& image) override;
  bool reentrant() const noexcept override { return true; }

 private:
  std::map<DetectionKey, std::optional<FaceDetection>> golden_;
  Options options_;
};

/// Runs `<command> <source> <source_key> <png path>` per image and parses one
/// sidecar line from its standard output.
class ExternalDetector final : public FaceDetector {
 public:
  explicit ExternalDetector(std::string command);
  std::optional<FaceDetection> detect(const DetectionKey& key, const Image& image) override;

 private:
  std::string command_;
  std::size_t counter_ = 0;
};

/// Parses "fixture:PATH" or "external:CMD".
std::unique_ptr<FaceDetector> make_detector(std::string_view spec);

/// Cache first, then the live detector (if any); fresh results are cached.
/// Throws DetectorError on a cache miss with no detector.
std::optional<FaceDetection> detect(FaceDetector* detector, DetectionCache& cache, const ImageSample& sample);

// ----------------------------------------------------------------- alignment

struct AlignedFace {
  Image image;                           // 48x48
  Affine2D source_to_aligned;            // maps source pixel coords into the output
  double rotation_degrees = 0.0;
  std::optional<LandmarkSet> landmarks;  // mapped into the output and clipped
};

/// Crop the (clipped) box, level the eyes by rotating about the crop centre
/// when both eyes are known, and resize to 48x48. nullopt when the clipped box
/// has zero area.
std::optional<AlignedFace> align_face(const Image& gray, const FaceDetection& detection);

struct AlignedSample {
  ImageSample sample;  // variant = aligned
  std::optional<LandmarkSet> landmarks;
  Affine2D source_to_aligned;
};

std::optional<AlignedSample> align(const ImageSample& sample, const FaceDetection& detection);

// ------------------------------------------------------------------- masking

struct MaskSize {
  int width = 10;
  int height = 14;
};

/// Inclusive pixel rectangle.
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
  bool empty() const noexcept { return x1 < x0 || y1 < y0; }
  bool contains(int x, int y) const noexcept { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Rectangle of the given extent around the landmark's pixel (rounded
/// coordinates). Along an axis of extent e the rectangle covers
/// [c - e/2, c - e/2 + e - 1] (integer division), i.e. for even extents the
/// low side holds e/2 pixels besides the centre. Clipped to the image.
PixelRect mask_rect(Point2 landmark, MaskSize size, int image_width, int image_height);

/// Zeroes every pixel outside the union of the landmark rectangles.
Image landmark_mask(const Image& aligned, const LandmarkSet& landmarks, MaskSize size = {});
ImageSample landmark_mask(const ImageSample& aligned, const LandmarkSet& landmarks, MaskSize size = {});

// ------------------------------------------------------------------ pipeline

struct Discard {
  std::string group_id;
  Variant variant;
  std::string reason;
};

struct PreprocessOutputs {
  DatasetManifest aligned;
  DatasetManifest cropped;
  std::vector<Discard> discarded;
};

/// Runs the detector over every original sample not yet cached.
void populate_cache(const DatasetManifest& manifest, FaceDetector* detector, DetectionCache& cache);

/// Aligned and landmark-masked variants of every original sample, with splits
/// inherited from the source sample.
PreprocessOutputs preprocess_variants(const DatasetManifest& manifest, const DetectionCache& cache,
                                      MaskSize mask = {});

/// Original + aligned + cropped variants per group. Groups keep the split of
/// their original sample; if the input is unsplit, a seeded group-aware
/// 80/10/10 split is applied to the result.
DatasetManifest build_augmented_merged(const DatasetManifest& manifest, const DetectionCache& cache,
                                       MaskSize mask = {}, std::uint64_t split_seed = 0);

}  // namespace ferkit
