#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "ferkit/emotion.hpp"
#include "ferkit/image.hpp"

namespace ferkit {

/// counts[true][predicted].
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumEmotions>, kNumEmotions> counts{};

  std::uint64_t total() const noexcept;
  std::uint64_t trace() const noexcept;
  std::uint64_t row_sum(std::size_t true_class) const noexcept;
  std::uint64_t col_sum(std::size_t predicted_class) const noexcept;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws std::invalid_argument on a length mismatch.
ConfusionMatrix confusion(std::span<const Emotion> truth, std::span<const Emotion> predicted);
/// Integer labels; additionally throws when a label is outside [0, 7).
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;  // row sum
  bool precision_undefined = false;  // TP + FP == 0, reported as 0
  bool recall_undefined = false;     // TP + FN == 0, reported as 0
};

struct MetricsReport {
  std::array<ClassMetrics, kNumEmotions> per_class{};
  double accuracy = 0.0;
  std::uint64_t total = 0;
};

/// Harmonic mean; 0 when both inputs are 0.
double f1_score(double precision, double recall) noexcept;
/// trace / total; throws std::invalid_argument for an empty matrix.
double accuracy(const ConfusionMatrix& m);
/// Throws std::invalid_argument for an empty matrix.
MetricsReport report(const ConfusionMatrix& m);

/// Per-class table with 3-decimal values followed by the accuracy line.
std::string render_report_text(const MetricsReport& r);
/// Aligned grid, rows = true label, columns = predicted label.
std::string render_confusion_text(const ConfusionMatrix& m);
std::string confusion_csv(const ConfusionMatrix& m);

nlohmann::json to_json(const ConfusionMatrix& m);
ConfusionMatrix confusion_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MetricsReport& r);

/// RGB heatmap of row-normalised counts with the raw counts printed in cells.
Image confusion_heatmap(const ConfusionMatrix& m, int cell_px = 64);

}  // namespace ferkit
