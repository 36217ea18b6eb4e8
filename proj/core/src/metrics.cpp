#include "ferkit/metrics.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

namespace ferkit {

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t t = 0;
  for (const auto& row : counts) {
    for (auto v : row) t += v;
  }
  return t;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t t = 0;
  for (std::size_t c = 0; c < kNumEmotions; ++c) t += counts[c][c];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t true_class) const noexcept {
  std::uint64_t t = 0;
  for (auto v : counts[true_class]) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted_class) const noexcept {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += row[predicted_class];
  return t;
}

ConfusionMatrix confusion(std::span<const Emotion> truth, std::span<const Emotion> predicted) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument(fmt::format("confusion: {} true labels vs {} predictions", truth.size(), predicted.size()));
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < truth.size(); ++i) ++m.counts[index_of(truth[i])][index_of(predicted[i])];
  return m;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument(fmt::format("confusion: {} true labels vs {} predictions", truth.size(), predicted.size()));
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || t >= static_cast<int>(kNumEmotions) || p < 0 || p >= static_cast<int>(kNumEmotions)) {
      throw std::invalid_argument(fmt::format("confusion: label out of range at position {} ({}, {})", i, t, p));
    }
    ++m.counts[t][p];
  }
  return m;
}

double f1_score(double precision, double recall) noexcept {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

double accuracy(const ConfusionMatrix& m) {
  const auto total = m.total();
  if (total == 0) throw std::invalid_argument("accuracy: empty confusion matrix");
  return static_cast<double>(m.trace()) / static_cast<double>(total);
}

MetricsReport report(const ConfusionMatrix& m) {
  MetricsReport r;
  r.total = m.total();
  r.accuracy = accuracy(m);
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    auto& cm = r.per_class[c];
    const auto tp = m.counts[c][c];
    const auto predicted = m.col_sum(c);
    cm.support = m.row_sum(c);
    cm.precision_undefined = predicted == 0;
    cm.recall_undefined = cm.support == 0;
    cm.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    cm.recall = cm.support ? static_cast<double>(tp) / static_cast<double>(cm.support) : 0.0;
    cm.f1 = f1_score(cm.precision, cm.recall);
  }
  return r;
}

std::string render_report_text(const MetricsReport& r) {
  std::string out = fmt::format("{:<10}{:>11}{:>9}{:>10}{:>9}\n", "Emotion", "Precision", "Recall", "F1 Score", "Support");
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    const auto& m = r.per_class[c];
    const char* flag = (m.precision_undefined || m.recall_undefined) ? " *" : "";
    out += fmt::format("{:<10}{:>11.3f}{:>9.3f}{:>10.3f}{:>9}{}\n", emotion_name(kAllEmotions[c]), m.precision,
                       m.recall, m.f1, m.support, flag);
  }
  out += fmt::format("{:<10}{:>11.3f}   (n = {})\n", "Accuracy", r.accuracy, r.total);
  bool any_flag = false;
  for (const auto& m : r.per_class) any_flag = any_flag || m.precision_undefined || m.recall_undefined;
  if (any_flag) out += "* undefined precision or recall reported as 0\n";
  return out;
}

std::string render_confusion_text(const ConfusionMatrix& m) {
  std::string out = "rows = true label, columns = predicted label\n";
  out += fmt::format("{:<10}", "");
  for (auto e : kAllEmotions) out += fmt::format("{:>9}", emotion_name(e));
  out += '\n';
  for (std::size_t t = 0; t < kNumEmotions; ++t) {
    out += fmt::format("{:<10}", emotion_name(kAllEmotions[t]));
    for (auto v : m.counts[t]) out += fmt::format("{:>9}", v);
    out += '\n';
  }
  return out;
}

std::string confusion_csv(const ConfusionMatrix& m) {
  std::string out = "true\\predicted";
  for (auto e : kAllEmotions) out += fmt::format(",{}", emotion_name(e));
  out += '\n';
  for (std::size_t t = 0; t < kNumEmotions; ++t) {
    out += emotion_name(kAllEmotions[t]);
    for (auto v : m.counts[t]) out += fmt::format(",{}", v);
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const ConfusionMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : m.counts) rows.push_back(row);
  return {{"orientation", "rows=true,cols=predicted"}, {"labels", [] {
             nlohmann::json l = nlohmann::json::array();
             for (auto e : kAllEmotions) l.push_back(std::string(emotion_name(e)));
             return l;
           }()},
          {"counts", rows}};
}

ConfusionMatrix confusion_from_json(const nlohmann::json& j) {
  ConfusionMatrix m;
  const auto& rows = j.at("counts");
  if (rows.size() != kNumEmotions) throw std::invalid_argument("confusion_from_json: expected 7 rows");
  for (std::size_t t = 0; t < kNumEmotions; ++t) {
    if (rows[t].size() != kNumEmotions) throw std::invalid_argument("confusion_from_json: expected 7 columns");
    for (std::size_t p = 0; p < kNumEmotions; ++p) m.counts[t][p] = rows[t][p].get<std::uint64_t>();
  }
  return m;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json classes = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    const auto& m = r.per_class[c];
    classes[std::string(emotion_name(kAllEmotions[c]))] = {{"precision", m.precision},
                                                           {"recall", m.recall},
                                                           {"f1", m.f1},
                                                           {"support", m.support},
                                                           {"precision_undefined", m.precision_undefined},
                                                           {"recall_undefined", m.recall_undefined}};
  }
  return {{"accuracy", r.accuracy}, {"total", r.total}, {"classes", classes}};
}

Image confusion_heatmap(const ConfusionMatrix& m, int cell_px) {
  if (cell_px < 16) throw std::invalid_argument("confusion_heatmap: cell_px must be >= 16");
  const int n = static_cast<int>(kNumEmotions);
  const int margin = 2 * cell_px;
  const int side = margin + n * cell_px;
  cv::Mat img(side, side, CV_8UC3, cv::Scalar(255, 255, 255));
  const double font = cell_px / 80.0;
  const int thick = std::max(1, cell_px / 48);

  for (int t = 0; t < n; ++t) {
    const auto row = m.row_sum(static_cast<std::size_t>(t));
    for (int p = 0; p < n; ++p) {
      const auto v = m.counts[t][p];
      const double frac = row ? static_cast<double>(v) / static_cast<double>(row) : 0.0;
      // White to dark blue, in RGB order.
      const cv::Scalar colour(255.0 * (1.0 - 0.85 * frac), 255.0 * (1.0 - 0.7 * frac), 255.0 * (1.0 - 0.3 * frac));
      const cv::Point tl(margin + p * cell_px, margin + t * cell_px);
      cv::rectangle(img, cv::Rect(tl.x, tl.y, cell_px, cell_px), colour, cv::FILLED);
      cv::rectangle(img, cv::Rect(tl.x, tl.y, cell_px, cell_px), cv::Scalar(160, 160, 160), 1);
      const std::string text = std::to_string(v);
      int base = 0;
      const auto size = cv::getTextSize(text, cv::FONT_HERSHEY_SIMPLEX, font, thick, &base);
      const cv::Scalar ink = frac > 0.5 ? cv::Scalar(255, 255, 255) : cv::Scalar(0, 0, 0);
      cv::putText(img, text, {tl.x + (cell_px - size.width) / 2, tl.y + (cell_px + size.height) / 2},
                  cv::FONT_HERSHEY_SIMPLEX, font, ink, thick, cv::LINE_8);
    }
  }
  for (int i = 0; i < n; ++i) {
    const std::string name(emotion_name(kAllEmotions[static_cast<std::size_t>(i)]).substr(0, 4));
    cv::putText(img, name, {4, margin + i * cell_px + cell_px / 2 + 5}, cv::FONT_HERSHEY_SIMPLEX, font, {0, 0, 0},
                thick, cv::LINE_8);
    cv::putText(img, name, {margin + i * cell_px + 4, margin - 8}, cv::FONT_HERSHEY_SIMPLEX, font, {0, 0, 0}, thick,
                cv::LINE_8);
  }
  cv::putText(img, "true \\ pred", {4, margin / 2}, cv::FONT_HERSHEY_SIMPLEX, font, {0, 0, 0}, thick, cv::LINE_8);

  std::vector<std::uint8_t> data(img.datastart, img.dataend);
  return Image(side, side, 3, std::move(data));
}

}  // namespace ferkit
