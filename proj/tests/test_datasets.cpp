#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "ferkit/datasets.hpp"
#include "ferkit/image_io.hpp"
#include "support.hpp"

namespace ferkit {
namespace {

namespace fs = std::filesystem;
using testkit::TempDir;
using testkit::make_sample;
using testkit::pattern_image;

const fs::path kData = FERKIT_TEST_DATA_DIR;

TEST(FerPlus, FixtureLabelsByMajorityVote) {
  const auto r = load_ferplus(kData / "ferplus_fixture.csv");
  EXPECT_TRUE(r.issues.empty());
  ASSERT_EQ(r.records.size(), 8u);
  const std::vector<RawLabel> expected = {RawLabel::Happy, RawLabel::Neutral, RawLabel::Surprise, RawLabel::Neutral,
                                          RawLabel::Angry, RawLabel::Disgust, RawLabel::Fear,     RawLabel::Sad};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(r.records[i].label, expected[i]) << i;
    EXPECT_EQ(r.records[i].source, DatasetId::FerPlus);
    EXPECT_EQ(r.records[i].image.width(), 48);
  }
  // Row 10 (sadness) keeps its original row number in the key.
  EXPECT_EQ(r.records.back().source_key, "row-000010");
  EXPECT_EQ(r.records[0].image.at(0, 0), 10);
  EXPECT_EQ(r.records[0].image.at(5, 2), 17);
}

TEST(FerPlus, MajorityVoteTiesGoToLowestIndex) {
  const int votes[10] = {0, 0, 0, 0, 5, 5, 0, 0, 0, 0};
  EXPECT_EQ(majority_vote(votes), RawLabel::Neutral);
  const int none[10] = {};
  EXPECT_FALSE(majority_vote(none).has_value());
  const int contempt[10] = {1, 0, 0, 0, 0, 0, 0, 6, 0, 0};
  EXPECT_EQ(majority_vote(contempt), RawLabel::Contempt);
}

TEST(FerPlus, MalformedRowsAreReportedNotFatal) {
  TempDir dir;
  std::string px;
  for (int i = 0; i < 2304; ++i) px += (i ? " " : "") + std::to_string(i % 200);
  std::ofstream(dir / "t.csv") << "Usage,neutral,happiness,surprise,sadness,anger,disgust,fear,contempt,unknown,NF,pixels\n"
                               << "Training,0,9,0,0,0,0,0,0,0,1," << px << "\n"
                               << "Training,0,9,0,0,0,0,0,0,0,1,1 2 3\n"
                               << "Training,x,9,0,0,0,0,0,0,0,1," << px << "\n"
                               << "Training,0,9\n"
                               << "Training,0,0,0,0,0,0,0,0,0,10," << px << "\n";
  const auto r = load_ferplus(dir / "t.csv");
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.issues.size(), 3u);
}

TEST(FerPlus, MissingPixelsColumnThrows) {
  TempDir dir;
  std::ofstream(dir / "t.csv") << "neutral,happiness\n1,2\n";
  EXPECT_THROW(load_ferplus(dir / "t.csv"), std::runtime_error);
  EXPECT_THROW(load_ferplus(dir / "absent.csv"), std::runtime_error);
}

TEST(CkPlus, DirectoryLabelsAndContemptSkipped) {
  TempDir dir;
  for (const char* d : {"anger", "happy", "contempt", "bogus"}) fs::create_directories(dir / d);
  Image rgb(64, 40, 3, 120);
  write_png(dir / "anger" / "S005_001.png", rgb);
  write_png(dir / "anger" / "S010_004.png", rgb);
  write_png(dir / "happy" / "S011_006.png", rgb);
  write_png(dir / "contempt" / "S012_001.png", rgb);
  const auto r = load_ckplus(dir.path());
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[0].label, RawLabel::Angry);
  EXPECT_EQ(r.records[0].source_key, "anger/S005_001.png");
  EXPECT_EQ(r.records[2].label, RawLabel::Happy);
  EXPECT_EQ(r.issues.size(), 1u);

  const auto s = standardize(r.records[0]);
  EXPECT_TRUE(s.pixels.is_canonical());
  EXPECT_EQ(s.label, Emotion::Angry);
}

TEST(Kdef, FileNameDecodingAndPoseFilter) {
  TempDir dir;
  fs::create_directories(dir / "AF01");
  Image img(30, 30, 3, 77);
  for (const char* n : {"AF01ANS.JPG", "AF01HAHL.JPG", "AF01SUFL.JPG", "AF01NEHR.png", "notkdef.png"}) {
    write_png(dir / "AF01" / n, img);
  }
  const auto r = load_kdef(dir.path(), kKdefDefaultPoses);
  ASSERT_EQ(r.records.size(), 3u);
  std::multiset<RawLabel> labels;
  for (const auto& rec : r.records) labels.insert(rec.label);
  EXPECT_EQ(labels, (std::multiset<RawLabel>{RawLabel::Angry, RawLabel::Happy, RawLabel::Neutral}));
  EXPECT_EQ(r.issues.size(), 1u);
  EXPECT_TRUE(load_kdef(dir.path(), {}).records.empty());
  EXPECT_EQ(load_kdef(dir.path(), {"FL"}).records.size(), 1u);
}

TEST(Manifest, RejectsBadRecords) {
  std::vector<ImageSample> dup = {make_sample("a", Emotion::Happy), make_sample("a", Emotion::Sad)};
  EXPECT_THROW(DatasetManifest{dup}, std::invalid_argument);

  auto small = make_sample("b", Emotion::Happy);
  small.pixels = Image(10, 10);
  EXPECT_THROW(DatasetManifest{std::vector{small}}, std::invalid_argument);

  auto a = make_sample("c", Emotion::Happy, Split::Train);
  auto b = make_sample("c", Emotion::Happy, Split::Val);
  b.variant = Variant::Aligned;
  EXPECT_THROW((DatasetManifest{std::vector{a, b}}), std::invalid_argument);
}

TEST(Manifest, CountsMatchRecords) {
  std::vector<ImageSample> s;
  for (int i = 0; i < 20; ++i) s.push_back(make_sample("k" + std::to_string(i), kAllEmotions[i % 7], Split::Unassigned,
                                                       DatasetId::FerPlus, i));
  DatasetManifest m(s);
  EXPECT_NO_THROW(m.validate());
  std::size_t sum = 0;
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    EXPECT_EQ(m.counts()[c], c < 6 ? 3u : 2u);
    sum += m.counts()[c];
  }
  EXPECT_EQ(sum, m.size());
  EXPECT_EQ(m.group_count(), 20u);
}

TEST(Split, SizesFollowFloorRule) {
  EXPECT_EQ(split_sizes(39134, {}), (SplitSizes{31307, 3913, 3914}));
  EXPECT_EQ(split_sizes(700, {}), (SplitSizes{560, 70, 70}));
  EXPECT_EQ(split_sizes(10, {}), (SplitSizes{8, 1, 1}));
  EXPECT_EQ(split_sizes(1, {}), (SplitSizes{0, 0, 1}));
  for (std::size_t g = 1; g < 500; ++g) {
    const auto s = split_sizes(g, {});
    EXPECT_EQ(s.train + s.val + s.test, g);
  }
}

TEST(Split, GroupsNeverStraddleAndSeedIsStable) {
  std::vector<ImageSample> s;
  for (int i = 0; i < 300; ++i) {
    for (auto v : {Variant::Original, Variant::Aligned, Variant::Cropped}) {
      auto x = make_sample("g" + std::to_string(i), kAllEmotions[i % 7], Split::Unassigned, DatasetId::FerPlus, i);
      x.variant = v;
      s.push_back(x);
    }
  }
  const DatasetManifest m(s);
  const auto a = split(m, {}, 11);
  const auto b = split(m, {}, 11);
  const auto c = split(m, {}, 12);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  EXPECT_EQ(a.info().seed, 11u);

  std::map<std::string, std::set<Split>> per_group;
  for (const auto& x : a.samples()) per_group[x.group_id()].insert(x.split);
  std::map<Split, std::size_t> groups;
  for (const auto& [g, splits] : per_group) {
    ASSERT_EQ(splits.size(), 1u) << g;
    ++groups[*splits.begin()];
  }
  EXPECT_EQ(groups[Split::Train], 240u);
  EXPECT_EQ(groups[Split::Val], 30u);
  EXPECT_EQ(groups[Split::Test], 30u);
}

TEST(Split, RejectsBadRatios) {
  const DatasetManifest m(std::vector<ImageSample>{make_sample("a", Emotion::Fear)});
  EXPECT_THROW(split(m, {0.5, 0.2, 0.2}, 0), std::invalid_argument);
  EXPECT_THROW(split(DatasetManifest{}, {}, 0), std::invalid_argument);
}

TEST(ManifestIo, RoundTripPreservesEverything) {
  TempDir dir;
  auto m = split(synth_generate(4, 3), {}, 5);
  save_manifest(m, dir / "m.txt");
  const auto back = load_manifest(dir / "m.txt");
  EXPECT_EQ(back.fingerprint(), m.fingerprint());
  ASSERT_EQ(back.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(back[i].pixels, m[i].pixels);
    EXPECT_EQ(back[i].split, m[i].split);
    EXPECT_EQ(back[i].source_key, m[i].source_key);
  }
  EXPECT_EQ(back.info().seed, 5u);

  const auto digest = pixel_digest(m[0].pixels);
  const auto png = dir / "pixels" / digest.substr(0, 2) / (digest + ".png");
  ASSERT_TRUE(fs::exists(png));
  EXPECT_EQ(read_image(png), m[0].pixels);
}

TEST(ManifestIo, CorruptHeaderThrows) {
  TempDir dir;
  std::ofstream(dir / "bad.txt") << "hello\n";
  EXPECT_THROW(load_manifest(dir / "bad.txt"), std::runtime_error);
}

TEST(Merge, ConcatenatesAndRejectsDuplicates) {
  const auto a = synth_generate(2, 1, {.domain = 0, .source = DatasetId::FerPlus});
  const auto b = synth_generate(2, 1, {.domain = 1, .source = DatasetId::CkPlus});
  const std::vector<DatasetManifest> both = {a, b};
  const auto m = merge(both);
  EXPECT_EQ(m.size(), a.size() + b.size());
  EXPECT_EQ(m.filter_source(DatasetId::CkPlus).size(), b.size());
  const std::vector<DatasetManifest> twice = {a, a};
  EXPECT_THROW(merge(twice), std::invalid_argument);
}

TEST(Synth, DeterministicPerSeedAndDomain) {
  const auto a = synth_generate(5, 42);
  EXPECT_EQ(a.size(), 35u);
  EXPECT_EQ(a.fingerprint(), synth_generate(5, 42).fingerprint());
  EXPECT_NE(a.fingerprint(), synth_generate(5, 43).fingerprint());
  EXPECT_NE(a.fingerprint(), synth_generate(5, 42, {.domain = 1}).fingerprint());
  for (auto c : a.counts()) EXPECT_EQ(c, 5u);
  EXPECT_THROW(synth_generate(0, 1), std::invalid_argument);
}

TEST(Fingerprint, SensitiveToPixelsLabelsAndSplit) {
  const auto base = synth_generate(2, 9);
  auto samples = base.samples();
  samples[3].pixels.at(1, 1) ^= 1;
  EXPECT_NE(DatasetManifest(samples).fingerprint(), base.fingerprint());
  samples = base.samples();
  samples[3].label = samples[3].label == Emotion::Sad ? Emotion::Happy : Emotion::Sad;
  EXPECT_NE(DatasetManifest(samples).fingerprint(), base.fingerprint());
  samples = base.samples();
  samples[3].split = Split::Test;
  EXPECT_NE(DatasetManifest(samples).fingerprint(), base.fingerprint());
  EXPECT_EQ(base.fingerprint().size(), 64u);
}

}  // namespace
}  // namespace ferkit
