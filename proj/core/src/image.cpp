#include "ferkit/image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ferkit {

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || (channels != 1 && channels != 3)) {
    throw std::invalid_argument("Image: bad geometry");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width < 0 || height < 0 || (channels != 1 && channels != 3)) {
    throw std::invalid_argument("Image: bad geometry");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw std::invalid_argument("Image: buffer size does not match geometry");
  }
}

Affine2D Affine2D::then(const Affine2D& n) const noexcept {
  // n ∘ this
  return {n.a * a + n.b * d, n.a * b + n.b * e, n.a * c + n.b * f + n.c,
          n.d * a + n.e * d, n.d * b + n.e * e, n.d * c + n.e * f + n.f};
}

Affine2D Affine2D::inverse() const {
  const double det = a * e - b * d;
  if (det == 0.0 || !std::isfinite(det)) throw std::domain_error("Affine2D: singular transform");
  const double ia = e / det, ib = -b / det, id = -d / det, ie = a / det;
  return {ia, ib, -(ia * c + ib * f), id, ie, -(id * c + ie * f)};
}

Affine2D Affine2D::translation(double tx, double ty) noexcept { return {1, 0, tx, 0, 1, ty}; }

Affine2D Affine2D::scaling(double sx, double sy) noexcept { return {sx, 0, 0, 0, sy, 0}; }

Affine2D Affine2D::rotation(double degrees, Point2 center) noexcept {
  const double t = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(t), sn = std::sin(t);
  const Affine2D r{cs, sn, 0, -sn, cs, 0};
  return translation(-center.x, -center.y).then(r).then(translation(center.x, center.y));
}

std::uint8_t saturate_u8(double v) noexcept {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v));
}

Image to_grayscale(const Image& img, const LumaWeights& luma) {
  if (img.channels() == 1) return img;
  Image out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out.at(x, y) = saturate_u8(luma.r * img.at(x, y, 0) + luma.g * img.at(x, y, 1) +
                                 luma.b * img.at(x, y, 2));
    }
  }
  return out;
}

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

Tap tap_for(double s, int extent) {
  s = std::clamp(s, 0.0, static_cast<double>(extent - 1));
  const int lo = static_cast<int>(std::floor(s));
  return {lo, std::min(lo + 1, extent - 1), s - lo};
}

double interpolate(const Image& g, const Tap& tx, const Tap& ty) {
  const double top = (1.0 - tx.frac) * g.at(tx.lo, ty.lo) + tx.frac * g.at(tx.hi, ty.lo);
  const double bottom = (1.0 - tx.frac) * g.at(tx.lo, ty.hi) + tx.frac * g.at(tx.hi, ty.hi);
  return (1.0 - ty.frac) * top + ty.frac * bottom;
}

}  // namespace

Image resize_bilinear(const Image& gray, int out_width, int out_height) {
  if (gray.channels() != 1) throw std::invalid_argument("resize_bilinear: expects one channel");
  if (gray.empty() || out_width <= 0 || out_height <= 0) {
    throw std::invalid_argument("resize_bilinear: empty input or output");
  }
  if (gray.width() == out_width && gray.height() == out_height) return gray;

  const double sx = static_cast<double>(gray.width()) / out_width;
  const double sy = static_cast<double>(gray.height()) / out_height;
  std::vector<Tap> xs(out_width);
  for (int u = 0; u < out_width; ++u) xs[u] = tap_for((u + 0.5) * sx - 0.5, gray.width());

  Image out(out_width, out_height, 1);
  for (int v = 0; v < out_height; ++v) {
    const Tap ty = tap_for((v + 0.5) * sy - 0.5, gray.height());
    for (int u = 0; u < out_width; ++u) out.at(u, v) = saturate_u8(interpolate(gray, xs[u], ty));
  }
  return out;
}

double sample_bilinear(const Image& gray, double x, double y) noexcept {
  if (!(x >= -0.5 && y >= -0.5 && x <= gray.width() - 0.5 && y <= gray.height() - 0.5)) {
    return 0.0;
  }
  return interpolate(gray, tap_for(x, gray.width()), tap_for(y, gray.height()));
}

Image warp_affine(const Image& gray, const Affine2D& dst_to_src, int out_width, int out_height) {
  if (gray.channels() != 1) throw std::invalid_argument("warp_affine: expects one channel");
  Image out(out_width, out_height, 1);
  for (int v = 0; v < out_height; ++v) {
    for (int u = 0; u < out_width; ++u) {
      const Point2 s = dst_to_src.apply({static_cast<double>(u), static_cast<double>(v)});
      out.at(u, v) = saturate_u8(sample_bilinear(gray, s.x, s.y));
    }
  }
  return out;
}

Image crop(const Image& img, int x, int y, int width, int height) {
  if (x < 0 || y < 0 || width <= 0 || height <= 0 || x + width > img.width() ||
      y + height > img.height()) {
    throw std::out_of_range("crop: rectangle outside image");
  }
  Image out(width, height, img.channels());
  const auto row = static_cast<std::size_t>(width) * img.channels();
  for (int r = 0; r < height; ++r) {
    const auto* src = img.pixels().data() +
                      (static_cast<std::size_t>(y + r) * img.width() + x) * img.channels();
    std::copy(src, src + row, out.pixels().data() + static_cast<std::size_t>(r) * row);
  }
  return out;
}

}  // namespace ferkit
