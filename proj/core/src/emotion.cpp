#include "ferkit/emotion.hpp"

#include <algorithm>
#include <cctype>

namespace ferkit {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view emotion_name(Emotion e) noexcept {
  switch (e) {
    case Emotion::Angry: return "Angry";
    case Emotion::Disgust: return "Disgust";
    case Emotion::Fear: return "Fear";
    case Emotion::Happy: return "Happy";
    case Emotion::Neutral: return "Neutral";
    case Emotion::Sad: return "Sad";
    case Emotion::Surprise: return "Surprise";
  }
  return "?";
}

std::optional<Emotion> emotion_from_index(long index) noexcept {
  if (index < 0 || index >= static_cast<long>(kNumEmotions)) return std::nullopt;
  return static_cast<Emotion>(index);
}

std::optional<Emotion> parse_emotion(std::string_view name) noexcept {
  const std::string n = lower(name);
  if (n == "angry" || n == "anger") return Emotion::Angry;
  if (n == "disgust" || n == "disgusted") return Emotion::Disgust;
  if (n == "fear" || n == "afraid" || n == "fearful") return Emotion::Fear;
  if (n == "happy" || n == "happiness") return Emotion::Happy;
  if (n == "neutral") return Emotion::Neutral;
  if (n == "sad" || n == "sadness") return Emotion::Sad;
  if (n == "surprise" || n == "surprised") return Emotion::Surprise;
  return std::nullopt;
}

std::optional<Emotion> to_emotion(RawLabel label) noexcept {
  const auto v = static_cast<std::size_t>(label);
  if (v < kNumEmotions) return static_cast<Emotion>(v);
  return std::nullopt;
}

RawLabel to_raw(Emotion e) noexcept { return static_cast<RawLabel>(index_of(e)); }

std::string_view dataset_name(DatasetId id) noexcept {
  switch (id) {
    case DatasetId::FerPlus: return "FERPLUS";
    case DatasetId::CkPlus: return "CKPLUS";
    case DatasetId::Kdef: return "KDEF";
    case DatasetId::Synthetic: return "SYNTH";
  }
  return "?";
}

std::optional<DatasetId> parse_dataset(std::string_view name) noexcept {
  const std::string n = lower(name);
  if (n == "ferplus" || n == "fer+") return DatasetId::FerPlus;
  if (n == "ckplus" || n == "ck+") return DatasetId::CkPlus;
  if (n == "kdef") return DatasetId::Kdef;
  if (n == "synth" || n == "synthetic") return DatasetId::Synthetic;
  return std::nullopt;
}

}  // namespace ferkit
