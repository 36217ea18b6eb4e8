#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "ferkit/image.hpp"
#include "ferkit/random.hpp"

namespace ferkit {

enum class AugOp : std::uint8_t {
  Identity,
  Rotate,
  TranslateX,
  TranslateY,
  ShearX,
  ShearY,
  Brightness,
  Contrast,
  Sharpness,
  Equalize,
  AutoContrast,
  Posterize,
  Solarize,
};

inline constexpr std::array<AugOp, 13> kAllAugOps = {
    AugOp::Identity,   AugOp::Rotate,   AugOp::TranslateX, AugOp::TranslateY, AugOp::ShearX,
    AugOp::ShearY,     AugOp::Brightness, AugOp::Contrast, AugOp::Sharpness,  AugOp::Equalize,
    AugOp::AutoContrast, AugOp::Posterize, AugOp::Solarize,
};

inline constexpr int kMaxMagnitude = 30;

std::string_view aug_op_name(AugOp op) noexcept;
std::optional<AugOp> parse_aug_op(std::string_view name) noexcept;

/// True for ops whose parameter is applied with a random sign.
bool is_signed(AugOp op) noexcept;

/// Parameter for magnitude m in [0, 30], before the sign is applied.
///
///   op            unit            m = 30 maps to
///   rotate        degrees         30
///   translate_*   pixels          0.45 * image side
///   shear_*       shear factor    0.3
///   brightness    factor delta    0.9  (factor = 1 + delta)
///   contrast      factor delta    0.9
///   sharpness     factor delta    0.9
///   posterize     bits kept       8 - round(4 m / 30)
///   solarize      threshold       255 * (1 - m / 30)
///   identity, equalize, autocontrast take no parameter (0).
double magnitude_to_param(AugOp op, int magnitude, int image_side = kSampleSide);

struct AugmentPolicy {
  int n_ops = 2;
  int magnitude = 9;
  std::vector<AugOp> op_pool{kAllAugOps.begin(), kAllAugOps.end()};

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
};

/// One op at an explicit (signed) parameter; shape is preserved and geometric
/// ops fill uncovered pixels with 0.
Image apply_op(const Image& gray, AugOp op, double signed_param);

/// Draws n_ops ops uniformly with replacement from the pool and applies them
/// in order at the policy magnitude, each signed op with a random sign.
Image rand_augment(const Image& gray, const AugmentPolicy& policy, Rng& rng);

}  // namespace ferkit
