#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ferkit {

/// The seven canonical emotion classes. The numeric value is the class index
/// used by manifests, confusion-matrix axes and model outputs.
enum class Emotion : std::uint8_t {
  Angry = 0,
  Disgust = 1,
  Fear = 2,
  Happy = 3,
  Neutral = 4,
  Sad = 5,
  Surprise = 6,
};

inline constexpr std::size_t kNumEmotions = 7;

inline constexpr std::array<Emotion, kNumEmotions> kAllEmotions = {
    Emotion::Angry, Emotion::Disgust, Emotion::Fear,    Emotion::Happy,
    Emotion::Neutral, Emotion::Sad,   Emotion::Surprise,
};

using ClassCounts = std::array<std::size_t, kNumEmotions>;

constexpr std::size_t index_of(Emotion e) noexcept {
  return static_cast<std::size_t>(e);
}

std::string_view emotion_name(Emotion e) noexcept;
std::optional<Emotion> emotion_from_index(long index) noexcept;
/// Accepts canonical names and the common dataset spellings
/// ("anger", "happiness", "sadness", ...), case-insensitive.
std::optional<Emotion> parse_emotion(std::string_view name) noexcept;

/// Label as read from a source dataset, before filtering. Only the first seven
/// values may survive into a manifest.
enum class RawLabel : std::uint8_t {
  Angry = 0,
  Disgust,
  Fear,
  Happy,
  Neutral,
  Sad,
  Surprise,
  Contempt,
  Unknown,
  NotAFace,
};

std::optional<Emotion> to_emotion(RawLabel label) noexcept;
RawLabel to_raw(Emotion e) noexcept;

enum class DatasetId : std::uint8_t { FerPlus, CkPlus, Kdef, Synthetic };

std::string_view dataset_name(DatasetId id) noexcept;
std::optional<DatasetId> parse_dataset(std::string_view name) noexcept;

}  // namespace ferkit
