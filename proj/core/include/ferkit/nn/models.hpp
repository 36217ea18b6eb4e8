#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

#include "ferkit/nn/module.hpp"

namespace ferkit::nn {

enum class Architecture : std::uint8_t { ResNet18, ResNet34, ResNet50, DenseNet121, EfficientNetB0 };

inline constexpr Architecture kAllArchitectures[] = {Architecture::ResNet18, Architecture::ResNet34,
                                                     Architecture::ResNet50, Architecture::DenseNet121,
                                                     Architecture::EfficientNetB0};

std::string_view architecture_name(Architecture a) noexcept;
std::optional<Architecture> parse_architecture(std::string_view name) noexcept;

struct ModelSpec {
  Architecture architecture = Architecture::ResNet18;
  int num_classes = 7;
  bool pretrained = false;
  /// Channel multiplier applied to every layer; 1.0 is the standard network.
  double width = 1.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument.
  void validate() const;
};

/// Maps [N, 1, 48, 48] inputs (roughly in [-1, 1]) to [N, num_classes] logits.
/// The single channel is replicated to the three the backbone expects.
class Classifier : public Module {
 public:
  virtual Tensor forward(const Tensor& x, bool training) = 0;
};

/// Seeded, deterministic construction. pretrained=true is rejected since no
/// weight store is bundled.
std::unique_ptr<Classifier> build_model(const ModelSpec& spec);

}  // namespace ferkit::nn
