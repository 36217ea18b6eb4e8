#include "ferkit/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ferkit {

std::string_view aug_op_name(AugOp op) noexcept {
  switch (op) {
    case AugOp::Identity: return "identity";
    case AugOp::Rotate: return "rotate";
    case AugOp::TranslateX: return "translate_x";
    case AugOp::TranslateY: return "translate_y";
    case AugOp::ShearX: return "shear_x";
    case AugOp::ShearY: return "shear_y";
    case AugOp::Brightness: return "brightness";
    case AugOp::Contrast: return "contrast";
    case AugOp::Sharpness: return "sharpness";
    case AugOp::Equalize: return "equalize";
    case AugOp::AutoContrast: return "autocontrast";
    case AugOp::Posterize: return "posterize";
    case AugOp::Solarize: return "solarize";
  }
  return "?";
}

std::optional<AugOp> parse_aug_op(std::string_view name) noexcept {
  for (auto op : kAllAugOps) {
    if (aug_op_name(op) == name) return op;
  }
  return std::nullopt;
}

bool is_signed(AugOp op) noexcept {
  switch (op) {
    case AugOp::Rotate:
    case AugOp::TranslateX:
    case AugOp::TranslateY:
    case AugOp::ShearX:
    case AugOp::ShearY:
    case AugOp::Brightness:
    case AugOp::Contrast:
    case AugOp::Sharpness: return true;
    default: return false;
  }
}

double magnitude_to_param(AugOp op, int magnitude, int image_side) {
  if (magnitude < 0 || magnitude > kMaxMagnitude) throw std::invalid_argument("magnitude outside [0, 30]");
  const double m = static_cast<double>(magnitude) / kMaxMagnitude;
  switch (op) {
    case AugOp::Rotate: return 30.0 * m;
    case AugOp::TranslateX:
    case AugOp::TranslateY: return 0.45 * image_side * m;
    case AugOp::ShearX:
    case AugOp::ShearY: return 0.3 * m;
    case AugOp::Brightness:
    case AugOp::Contrast:
    case AugOp::Sharpness: return 0.9 * m;
    case AugOp::Posterize: return 8.0 - std::round(4.0 * m);
    case AugOp::Solarize: return 255.0 * (1.0 - m);
    default: return 0.0;
  }
}

void AugmentPolicy::validate() const {
  if (n_ops < 0) throw std::invalid_argument("augment: n_ops must be >= 0");
  if (magnitude < 0 || magnitude > kMaxMagnitude) throw std::invalid_argument("augment: magnitude must be in [0, 30]");
  if (n_ops > 0 && op_pool.empty()) throw std::invalid_argument("augment: op pool is empty");
}

namespace {

Image warp_centered(const Image& g, double a, double b, double d, double e) {
  // Output pixel p reads input at M (p - c) + c.
  const double cx = (g.width() - 1) / 2.0, cy = (g.height() - 1) / 2.0;
  const Affine2D m{a, b, cx - a * cx - b * cy, d, e, cy - d * cx - e * cy};
  return warp_affine(g, m, g.width(), g.height());
}

Image blend(const Image& degenerate, const Image& g, double factor) {
  Image out(g.width(), g.height(), 1);
  auto dst = out.pixels();
  const auto src = g.pixels();
  const auto deg = degenerate.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = saturate_u8(deg[i] + factor * (src[i] - deg[i]));
  return out;
}

Image point_map(const Image& g, const std::array<std::uint8_t, 256>& lut) {
  Image out = g;
  for (auto& v : out.pixels()) v = lut[v];
  return out;
}

Image equalize(const Image& g) {
  std::array<std::size_t, 256> hist{};
  for (auto v : g.pixels()) ++hist[v];
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    if (hist[i] != 0) last_nonzero = i;
  }
  const std::size_t step = (g.size() - hist[last_nonzero]) / 255;
  if (step == 0) return g;
  std::array<std::uint8_t, 256> lut{};
  std::size_t n = step / 2;
  for (std::size_t i = 0; i < 256; ++i) {
    lut[i] = static_cast<std::uint8_t>(std::min<std::size_t>(n / step, 255));
    n += hist[i];
  }
  return point_map(g, lut);
}

Image autocontrast(const Image& g) {
  const auto [lo, hi] = std::minmax_element(g.pixels().begin(), g.pixels().end());
  if (*hi <= *lo) return g;
  const double scale = 255.0 / (*hi - *lo);
  std::array<std::uint8_t, 256> lut{};
  for (int i = 0; i < 256; ++i) lut[i] = saturate_u8((i - *lo) * scale);
  return point_map(g, lut);
}

Image smooth(const Image& g) {
  Image out = g;
  for (int y = 1; y + 1 < g.height(); ++y) {
    for (int x = 1; x + 1 < g.width(); ++x) {
      int acc = 4 * g.at(x, y);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) acc += g.at(x + dx, y + dy);
      }
      out.at(x, y) = saturate_u8(acc / 13.0);
    }
  }
  return out;
}

}  // namespace

Image apply_op(const Image& g, AugOp op, double p) {
  if (g.channels() != 1) throw std::invalid_argument("apply_op: expects a grayscale image");
  switch (op) {
    case AugOp::Identity: return g;
    case AugOp::Rotate: {
      const Affine2D r = Affine2D::rotation(p, {(g.width() - 1) / 2.0, (g.height() - 1) / 2.0});
      return warp_affine(g, r.inverse(), g.width(), g.height());
    }
    case AugOp::TranslateX: return warp_affine(g, Affine2D::translation(-p, 0.0), g.width(), g.height());
    case AugOp::TranslateY: return warp_affine(g, Affine2D::translation(0.0, -p), g.width(), g.height());
    case AugOp::ShearX: return warp_centered(g, 1.0, p, 0.0, 1.0);
    case AugOp::ShearY: return warp_centered(g, 1.0, 0.0, p, 1.0);
    case AugOp::Brightness: return blend(Image(g.width(), g.height(), 1, 0), g, 1.0 + p);
    case AugOp::Contrast: {
      double sum = 0.0;
      for (auto v : g.pixels()) sum += v;
      const auto mean = static_cast<std::uint8_t>(g.empty() ? 0 : std::floor(sum / g.size() + 0.5));
      return blend(Image(g.width(), g.height(), 1, mean), g, 1.0 + p);
    }
    case AugOp::Sharpness: return blend(smooth(g), g, 1.0 + p);
    case AugOp::Equalize: return equalize(g);
    case AugOp::AutoContrast: return autocontrast(g);
    case AugOp::Posterize: {
      const int bits = std::clamp(static_cast<int>(std::lround(p)), 1, 8);
      const auto mask = static_cast<std::uint8_t>(0xFF << (8 - bits));
      Image out = g;
      for (auto& v : out.pixels()) v &= mask;
      return out;
    }
    case AugOp::Solarize: {
      Image out = g;
      for (auto& v : out.pixels()) {
        if (v >= p) v = static_cast<std::uint8_t>(255 - v);
      }
      return out;
    }
  }
  return g;
}

Image rand_augment(const Image& gray, const AugmentPolicy& policy, Rng& rng) {
  policy.validate();
  Image out = gray;
  for (int i = 0; i < policy.n_ops; ++i) {
    const AugOp op = policy.op_pool[rng.below(policy.op_pool.size())];
    double param = magnitude_to_param(op, policy.magnitude, std::min(gray.width(), gray.height()));
    if (is_signed(op) && rng.coin()) param = -param;
    out = apply_op(out, op, param);
  }
  return out;
}

}  // namespace ferkit
