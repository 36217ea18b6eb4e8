#pragma once

#include <array>

#include "ferkit/emotion.hpp"
#include "ferkit/image.hpp"

namespace ferkit::testkit {

/// Published per-class scores of the merged-dataset model.
struct PublishedScores {
  double precision, recall, f1;
};

struct PublishedRow {
  Emotion emotion;
  PublishedScores without_sampler;
  PublishedScores with_sampler;
};

inline constexpr std::array<PublishedRow, kNumEmotions> kPublishedScores = {{
    {Emotion::Angry, {0.809, 0.758, 0.782}, {0.806, 0.774, 0.789}},
    {Emotion::Disgust, {0.800, 0.790, 0.795}, {0.849, 0.816, 0.832}},
    {Emotion::Fear, {0.807, 0.628, 0.707}, {0.845, 0.628, 0.721}},
    {Emotion::Happy, {0.897, 0.920, 0.908}, {0.892, 0.903, 0.898}},
    {Emotion::Neutral, {0.806, 0.879, 0.841}, {0.804, 0.862, 0.832}},
    {Emotion::Sad, {0.725, 0.572, 0.640}, {0.677, 0.594, 0.633}},
    {Emotion::Surprise, {0.854, 0.837, 0.855}, {0.856, 0.837, 0.846}},
}};

/// Merged per-class totals, Angry .. Surprise.
inline constexpr std::array<std::size_t, kNumEmotions> kMergedClassCounts = {3665, 845, 1314, 9982, 13325, 4873, 5130};

}  // namespace ferkit::testkit
