#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ferkit {

/// Side length of every canonical sample.
inline constexpr int kSampleSide = 48;

/// 8-bit image, row-major, channels interleaved. Colour images are RGB.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 1, std::uint8_t fill = 0);
  Image(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::uint8_t& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<const std::uint8_t> pixels() const noexcept { return data_; }
  std::span<std::uint8_t> pixels() noexcept { return data_; }

  bool is_canonical() const noexcept {
    return width_ == kSampleSide && height_ == kSampleSide && channels_ == 1;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<std::uint8_t> data_;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// x' = a*x + b*y + c, y' = d*x + e*y + f
struct Affine2D {
  double a = 1.0, b = 0.0, c = 0.0;
  double d = 0.0, e = 1.0, f = 0.0;

  Point2 apply(Point2 p) const noexcept { return {a * p.x + b * p.y + c, d * p.x + e * p.y + f}; }
  /// Transform that applies *this first and then `next`.
  Affine2D then(const Affine2D& next) const noexcept;
  Affine2D inverse() const;

  static Affine2D translation(double tx, double ty) noexcept;
  static Affine2D scaling(double sx, double sy) noexcept;
  /// Rotation about `center` that decreases the direction angle atan2(dy, dx)
  /// of every vector by `degrees`.
  static Affine2D rotation(double degrees, Point2 center) noexcept;
};

struct LumaWeights {
  double r = 0.299;
  double g = 0.587;
  double b = 0.114;
};

/// Rounds to nearest (halves away from zero) and clamps to [0, 255].
std::uint8_t saturate_u8(double v) noexcept;

/// RGB to single channel; single-channel input is returned unchanged.
Image to_grayscale(const Image& img, const LumaWeights& luma = {});

/// Bilinear resampling with pixel-centre alignment
/// (src = (dst + 0.5) * in / out - 0.5, clamped to the image).
Image resize_bilinear(const Image& gray, int out_width, int out_height);

/// Bilinear sample of a single-channel image at pixel-centre coordinates.
/// Points outside the pixel area [-0.5, size - 0.5] read as 0.
double sample_bilinear(const Image& gray, double x, double y) noexcept;

/// Each destination pixel (u, v) reads the source at dst_to_src(u, v).
Image warp_affine(const Image& gray, const Affine2D& dst_to_src, int out_width, int out_height);

/// Crops the rectangle; the rectangle must lie inside the image.
Image crop(const Image& img, int x, int y, int width, int height);

}  // namespace ferkit
