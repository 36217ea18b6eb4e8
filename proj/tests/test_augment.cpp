#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "ferkit/augment.hpp"
#include "support.hpp"

namespace ferkit {
namespace {

Image ramp() {
  Image img(kSampleSide, kSampleSide);
  for (int y = 0; y < kSampleSide; ++y) {
    for (int x = 0; x < kSampleSide; ++x) img.at(x, y) = static_cast<std::uint8_t>(40 + 3 * x + y);
  }
  return img;
}

TEST(Magnitude, TableEndpoints) {
  EXPECT_DOUBLE_EQ(magnitude_to_param(AugOp::Rotate, 30), 30.0);
  EXPECT_DOUBLE_EQ(magnitude_to_param(AugOp::Rotate, 9), 9.0);
  EXPECT_DOUBLE_EQ(magnitude_to_param(AugOp::TranslateX, 30), 0.45 * 48);
  EXPECT_DOUBLE_EQ(magnitude_to_param(AugOp::ShearY, 15), 0.15);
  EXPECT_DOUBLE_EQ(magnitude_to_param(AugOp::Contrast, 30), 0.9);
  EXPECT_DOUBLE_EQ(magnitude_to_param(AugOp::Posterize, 0), 8.0);
  EXPECT_DOUBLE_EQ(magnitude_to_param(AugOp::Posterize, 30), 4.0);
  EXPECT_DOUBLE_EQ(magnitude_to_param(AugOp::Solarize, 0), 255.0);
  EXPECT_DOUBLE_EQ(magnitude_to_param(AugOp::Solarize, 30), 0.0);
  EXPECT_DOUBLE_EQ(magnitude_to_param(AugOp::Equalize, 30), 0.0);
  for (auto op : kAllAugOps) EXPECT_DOUBLE_EQ(is_signed(op) ? magnitude_to_param(op, 0) : 0.0, 0.0);
  EXPECT_THROW(magnitude_to_param(AugOp::Rotate, 31), std::invalid_argument);
  EXPECT_THROW(magnitude_to_param(AugOp::Rotate, -1), std::invalid_argument);
}

TEST(Magnitude, MonotoneInM) {
  for (auto op : {AugOp::Rotate, AugOp::TranslateY, AugOp::ShearX, AugOp::Brightness, AugOp::Sharpness}) {
    for (int m = 1; m <= 30; ++m) EXPECT_GT(magnitude_to_param(op, m), magnitude_to_param(op, m - 1));
  }
}

TEST(Names, RoundTrip) {
  std::set<std::string_view> names;
  for (auto op : kAllAugOps) {
    EXPECT_EQ(parse_aug_op(aug_op_name(op)), op);
    names.insert(aug_op_name(op));
  }
  EXPECT_EQ(names.size(), kAllAugOps.size());
  EXPECT_FALSE(parse_aug_op("cutout").has_value());
}

TEST(Ops, ZeroParameterGeometryIsIdentity) {
  const auto img = ramp();
  for (auto op : {AugOp::Identity, AugOp::Rotate, AugOp::TranslateX, AugOp::TranslateY, AugOp::ShearX, AugOp::ShearY,
                  AugOp::Brightness, AugOp::Contrast, AugOp::Sharpness}) {
    EXPECT_EQ(apply_op(img, op, 0.0), img) << aug_op_name(op);
  }
}

TEST(Ops, IntegerTranslateShiftsAndZeroFills) {
  const auto img = ramp();
  const auto out = apply_op(img, AugOp::TranslateX, 5.0);
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 48; ++x) EXPECT_EQ(out.at(x, y), x < 5 ? 0 : img.at(x - 5, y));
  }
  const auto up = apply_op(img, AugOp::TranslateY, -3.0);
  EXPECT_EQ(up.at(10, 0), img.at(10, 3));
  EXPECT_EQ(up.at(10, 47), 0);
}

TEST(Ops, QuarterTurnRotation) {
  Image img(kSampleSide, kSampleSide);
  img.at(40, 23) = 200;
  const auto out = apply_op(img, AugOp::Rotate, 90.0);
  // Rotation decreases the direction angle, so +x maps to -y in image coords.
  EXPECT_EQ(out.at(23, 7), 200);
  EXPECT_EQ(out.at(40, 23), 0);
}

TEST(Ops, PhotometricOracles) {
  const auto img = ramp();
  const auto bright = apply_op(img, AugOp::Brightness, 0.5);
  const auto dark = apply_op(img, AugOp::Brightness, -0.5);
  const auto post = apply_op(img, AugOp::Posterize, 4.0);
  const auto sol = apply_op(img, AugOp::Solarize, 128.0);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const int v = img.pixels()[i];
    EXPECT_EQ(bright.pixels()[i], saturate_u8(1.5 * v));
    EXPECT_EQ(dark.pixels()[i], saturate_u8(0.5 * v));
    EXPECT_EQ(post.pixels()[i], v & 0xF0);
    EXPECT_EQ(sol.pixels()[i], v >= 128 ? 255 - v : v);
  }
}

TEST(Ops, ContrastAroundRoundedMean) {
  Image img(4, 1, 1, std::vector<std::uint8_t>{10, 20, 30, 41});
  const auto out = apply_op(img, AugOp::Contrast, 1.0);  // factor 2 around mean 25
  EXPECT_EQ(out.pixels()[0], 0);
  EXPECT_EQ(out.pixels()[1], 15);
  EXPECT_EQ(out.pixels()[2], 35);
  EXPECT_EQ(out.pixels()[3], 57);
}

TEST(Ops, AutoContrastStretches) {
  Image img(3, 1, 1, std::vector<std::uint8_t>{50, 100, 150});
  const auto out = apply_op(img, AugOp::AutoContrast, 0.0);
  EXPECT_EQ(out.pixels()[0], 0);
  EXPECT_EQ(out.pixels()[1], saturate_u8(50 * (255.0 / 100)));
  EXPECT_EQ(out.pixels()[2], 255);
  Image flat(3, 1, 1, 77);
  EXPECT_EQ(apply_op(flat, AugOp::AutoContrast, 0.0), flat);
}

TEST(Ops, EqualizeFlattensHistogram) {
  const auto img = ramp();
  const auto out = apply_op(img, AugOp::Equalize, 0.0);
  EXPECT_EQ(*std::min_element(out.pixels().begin(), out.pixels().end()), 0);
  EXPECT_GE(*std::max_element(out.pixels().begin(), out.pixels().end()), 250);
  // Monotone point map.
  for (std::size_t i = 0; i < img.size(); ++i) {
    for (std::size_t j = 0; j < img.size(); j += 97) {
      if (img.pixels()[i] < img.pixels()[j]) EXPECT_LE(out.pixels()[i], out.pixels()[j]);
    }
  }
}

TEST(Ops, ShapePreservedEverywhere) {
  const auto img = ramp();
  for (auto op : kAllAugOps) {
    const auto out = apply_op(img, op, magnitude_to_param(op, 20));
    EXPECT_EQ(out.width(), 48);
    EXPECT_EQ(out.height(), 48);
    EXPECT_EQ(out.channels(), 1);
  }
  EXPECT_THROW(apply_op(Image(4, 4, 3), AugOp::Identity, 0), std::invalid_argument);
}

TEST(RandAugment, SeededStreamsAreReproducible) {
  const auto img = testkit::pattern_image(2);
  AugmentPolicy p;
  p.magnitude = 15;
  int differing = 0;
  for (std::uint64_t pos = 0; pos < 50; ++pos) {
    Rng a = Rng::derive(7, {1, pos}), b = Rng::derive(7, {1, pos});
    const auto x = rand_augment(img, p, a);
    EXPECT_EQ(x, rand_augment(img, p, b));
    differing += x != img;
  }
  EXPECT_GT(differing, 30);
}

TEST(RandAugment, PoolAndCountRespected) {
  const auto img = ramp();
  AugmentPolicy p;
  p.n_ops = 0;
  Rng rng(1);
  EXPECT_EQ(rand_augment(img, p, rng), img);

  p.n_ops = 3;
  p.op_pool = {AugOp::Solarize};
  p.magnitude = 30;  // threshold 0: every solarize inverts
  EXPECT_EQ(rand_augment(img, p, rng), apply_op(img, AugOp::Solarize, 0.0));
}

TEST(RandAugment, DrawsOpsUniformly) {
  AugmentPolicy p;
  p.n_ops = 1;
  p.op_pool = {AugOp::Identity, AugOp::Posterize};
  p.magnitude = 30;
  const auto img = ramp();
  Rng rng(99);
  int identity = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) identity += rand_augment(img, p, rng) == img;
  EXPECT_NEAR(identity / double(n), 0.5, 0.04);
}

TEST(Policy, Validation) {
  AugmentPolicy p;
  EXPECT_NO_THROW(p.validate());
  p.magnitude = 31;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.n_ops = -1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.op_pool.clear();
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace ferkit
