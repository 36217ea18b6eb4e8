#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "ferkit/preprocess.hpp"
#include "support.hpp"

namespace ferkit {
namespace {

using testkit::TempDir;
using testkit::make_sample;

std::size_t count_nonzero(const Image& img) {
  std::size_t n = 0;
  for (auto v : img.pixels()) n += v != 0;
  return n;
}

Image white() { return Image(kSampleSide, kSampleSide, 1, 255); }

LandmarkSet all_at(Point2 p) { return {p, p, p, p, p}; }

FaceDetection face(BoundingBox box, std::optional<LandmarkSet> lm = std::nullopt) { return {box, lm, 0.9}; }

TEST(Sidecar, RoundTripIsExact) {
  const DetectionKey key{DatasetId::Kdef, "AF01/AF01ANS.JPG"};
  const LandmarkSet lm{{10.1, 12.25}, {30.3, 12.0}, {20.0, 22.0 / 3.0}, {14.0, 33.5}, {28.0, 33.0}};
  const FaceDetection det{{1.5, 2.25, 40.0, 41.0 / 7.0}, lm, 0.987654321};
  const auto line = format_sidecar_line(key, det);
  const auto back = parse_sidecar_line(line);
  EXPECT_EQ(back.key, key);
  ASSERT_TRUE(back.detection.has_value());
  EXPECT_EQ(*back.detection, det);

  const auto none = parse_sidecar_line(format_sidecar_line(key, std::nullopt));
  EXPECT_FALSE(none.detection.has_value());

  FaceDetection no_lm = det;
  no_lm.landmarks.reset();
  EXPECT_EQ(*parse_sidecar_line(format_sidecar_line(key, no_lm)).detection, no_lm);
}

TEST(Sidecar, MalformedLinesThrow) {
  EXPECT_THROW(parse_sidecar_line("FERPLUS,a,ok,1,2"), std::invalid_argument);
  EXPECT_THROW(parse_sidecar_line("NOPE,a,none"), std::invalid_argument);
  EXPECT_THROW(parse_sidecar_line("FERPLUS,a,ok,0,0,-3,4,1"), std::invalid_argument);
  EXPECT_THROW(parse_sidecar_line("FERPLUS,a,maybe"), std::invalid_argument);
}

TEST(Cache, SaveLoadIsSortedAndStable) {
  TempDir dir;
  DetectionCache c;
  c.store({DatasetId::Kdef, "b"}, face({0, 0, 10, 10}));
  c.store({DatasetId::FerPlus, "z"}, std::nullopt);
  c.store({DatasetId::FerPlus, "a"}, face({1, 1, 5, 5}));
  c.save(dir / "c.csv");
  const auto back = DetectionCache::load(dir / "c.csv");
  EXPECT_EQ(back.size(), 3u);
  ASSERT_NE(back.find({DatasetId::FerPlus, "z"}), nullptr);
  EXPECT_FALSE(back.find({DatasetId::FerPlus, "z"})->has_value());
  EXPECT_EQ(back.find({DatasetId::Kdef, "missing"}), nullptr);
  back.save(dir / "c2.csv");
  std::ifstream a(dir / "c.csv"), b(dir / "c2.csv");
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST(Detect, CacheFirstThenDetectorThenError) {
  const auto s = make_sample("k1", Emotion::Happy);
  FixtureDetector det(std::vector<SidecarEntry>{{detection_key(s), face({4, 4, 40, 40})}});
  DetectionCache cache;
  EXPECT_THROW(detect(nullptr, cache, s), DetectorError);
  const auto got = detect(&det, cache, s);
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(cache.size(), 1u);
  EXPECT_EQ(detect(nullptr, cache, s), got);

  const auto other = make_sample("unknown", Emotion::Happy);
  EXPECT_THROW(det.detect(detection_key(other), other.pixels), DetectorError);
}

TEST(Detect, FixtureRejectBlank) {
  auto s = make_sample("k", Emotion::Sad);
  s.pixels = Image(kSampleSide, kSampleSide, 1, 0);
  FixtureDetector det(std::vector<SidecarEntry>{{detection_key(s), face({0, 0, 48, 48})}},
                      FixtureDetector::Options{.reject_blank = true});
  EXPECT_FALSE(det.detect(detection_key(s), s.pixels).has_value());
}

TEST(Align, FullBoxNoLandmarksIsIdentity) {
  const auto img = testkit::pattern_image(3);
  const auto a = align_face(img, face({0, 0, 48, 48}));
  ASSERT_TRUE(a.has_value());
  EXPECT_EQ(a->image, img);
  EXPECT_DOUBLE_EQ(a->rotation_degrees, 0.0);
}

TEST(Align, LevelsTheEyes) {
  const auto img = testkit::pattern_image(1);
  LandmarkSet lm{{14, 18}, {34, 26}, {24, 28}, {18, 36}, {30, 38}};
  const auto a = align_face(img, face({0, 0, 48, 48}, lm));
  ASSERT_TRUE(a && a->landmarks);
  EXPECT_NEAR(a->landmarks->right_eye.y, a->landmarks->left_eye.y, 1e-9);
  EXPECT_NEAR(std::abs(a->rotation_degrees), std::atan2(8.0, 20.0) * 180.0 / M_PI, 1e-9);
  // Mapped landmarks agree with the returned transform.
  const auto p = a->source_to_aligned.apply(lm.nose);
  EXPECT_NEAR(p.x, a->landmarks->nose.x, 1e-9);
}

TEST(Align, DegenerateBoxIsNullopt) {
  const auto img = testkit::pattern_image(0);
  EXPECT_FALSE(align_face(img, face({60, 60, 10, 10})).has_value());
  EXPECT_FALSE(align_face(img, face({-20, 5, 20, 10})).has_value());
}

TEST(Mask, SingleCentredLandmarkKeeps140) {
  const auto out = landmark_mask(white(), all_at({24, 24}));
  EXPECT_EQ(count_nonzero(out), 140u);
  EXPECT_EQ(mask_rect({24, 24}, {}, 48, 48), (PixelRect{19, 17, 28, 30}));
}

TEST(Mask, FiveDisjointLandmarksKeep700) {
  LandmarkSet lm{{8, 8}, {38, 8}, {24, 24}, {8, 40}, {38, 40}};
  EXPECT_EQ(count_nonzero(landmark_mask(white(), lm)), 700u);
}

TEST(Mask, CornersAreClipped) {
  EXPECT_EQ(count_nonzero(landmark_mask(white(), all_at({0, 0}))), 5u * 7u);
  EXPECT_EQ(count_nonzero(landmark_mask(white(), all_at({47, 47}))), 6u * 8u);
  EXPECT_EQ(count_nonzero(landmark_mask(white(), all_at({47, 0}))), 6u * 7u);
}

TEST(Mask, ExhaustiveAgainstRectOracle) {
  // Every landmark position: the kept set equals the clipped rectangle.
  for (int cy = 0; cy < 48; ++cy) {
    for (int cx = 0; cx < 48; ++cx) {
      const auto out = landmark_mask(white(), all_at({double(cx), double(cy)}));
      const int w = std::min(cx + 4, 47) - std::max(cx - 5, 0) + 1;
      const int h = std::min(cy + 6, 47) - std::max(cy - 7, 0) + 1;
      ASSERT_EQ(count_nonzero(out), static_cast<std::size_t>(w * h)) << cx << "," << cy;
    }
  }
}

TEST(Mask, CustomSize) {
  EXPECT_EQ(count_nonzero(landmark_mask(white(), all_at({24, 24}), {6, 6})), 36u);
}

struct PipelineFixture {
  DatasetManifest manifest;
  DetectionCache cache;
  PipelineFixture() {
    std::vector<ImageSample> s;
    for (int i = 0; i < 40; ++i) {
      s.push_back(make_sample("p" + std::to_string(i), kAllEmotions[i % 7], Split::Unassigned, DatasetId::FerPlus, i));
    }
    manifest = DatasetManifest(s);
    const LandmarkSet lm{{16, 18}, {32, 18}, {24, 26}, {18, 36}, {30, 36}};
    for (int i = 0; i < 40; ++i) {
      const DetectionKey key{DatasetId::FerPlus, "p" + std::to_string(i)};
      if (i == 5) cache.store(key, std::nullopt);
      else if (i == 6) cache.store(key, face({2, 2, 44, 44}));
      else cache.store(key, face({2, 2, 44, 44}, lm));
    }
  }
};

TEST(Pipeline, VariantsAndDiscards) {
  PipelineFixture f;
  const auto out = preprocess_variants(f.manifest, f.cache);
  EXPECT_EQ(out.aligned.size(), 39u);
  EXPECT_EQ(out.cropped.size(), 38u);
  EXPECT_EQ(out.discarded.size(), 3u);
  for (const auto& s : out.cropped.samples()) EXPECT_EQ(s.variant, Variant::Cropped);
}

TEST(Pipeline, MissingCacheEntryThrows) {
  PipelineFixture f;
  DetectionCache empty;
  EXPECT_THROW(preprocess_variants(f.manifest, empty), DetectorError);
}

TEST(Pipeline, AugmentedMergedHasNoGroupLeakage) {
  PipelineFixture f;
  for (std::uint64_t seed : {0u, 1u, 2u, 3u}) {
    const auto m = build_augmented_merged(f.manifest, f.cache, {}, seed);
    EXPECT_EQ(m.size(), 40u + 39u + 38u);
    std::map<std::string, std::set<Split>> per_group;
    for (const auto& s : m.samples()) per_group[s.group_id()].insert(s.split);
    EXPECT_EQ(per_group.size(), 40u);
    for (const auto& [g, splits] : per_group) {
      EXPECT_EQ(splits.size(), 1u) << g;
      EXPECT_FALSE(splits.contains(Split::Unassigned));
    }
  }
}

TEST(Pipeline, PreSplitInputKeepsItsSplits) {
  PipelineFixture f;
  const auto pre = split(f.manifest, {}, 9);
  const auto m = build_augmented_merged(pre, f.cache);
  std::map<std::string, Split> orig;
  for (const auto& s : pre.samples()) orig[s.group_id()] = s.split;
  for (const auto& s : m.samples()) EXPECT_EQ(s.split, orig.at(s.group_id()));
}

}  // namespace
}  // namespace ferkit
