#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "ferkit/metrics.hpp"
#include "ferkit/random.hpp"
#include "reference_tables.hpp"

namespace ferkit {
namespace {

std::pair<std::vector<int>, std::vector<int>> random_pairs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> t(n), p(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = static_cast<int>(rng.below(7));
    // Biased towards correct so precision/recall are not all ~1/7.
    p[i] = rng.uniform() < 0.6 ? t[i] : static_cast<int>(rng.below(7));
  }
  return {t, p};
}

TEST(Confusion, SmallExample) {
  const std::vector<int> t = {0, 0, 1, 2, 2, 2};
  const std::vector<int> p = {0, 1, 1, 2, 2, 0};
  const auto m = confusion(t, p);
  EXPECT_EQ(m.counts[0][0], 1u);
  EXPECT_EQ(m.counts[0][1], 1u);
  EXPECT_EQ(m.counts[2][0], 1u);
  EXPECT_EQ(m.total(), 6u);
  EXPECT_EQ(m.trace(), 4u);
  const auto r = report(m);
  EXPECT_DOUBLE_EQ(r.per_class[0].precision, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class[0].recall, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class[2].precision, 1.0);
  EXPECT_DOUBLE_EQ(r.per_class[2].recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_class[2].f1, 0.8);
  EXPECT_TRUE(r.per_class[5].precision_undefined);
  EXPECT_TRUE(r.per_class[5].recall_undefined);
  EXPECT_DOUBLE_EQ(r.per_class[5].f1, 0.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 4.0 / 6.0);
}

TEST(Confusion, InputChecks) {
  const std::vector<int> a = {0, 1}, b = {0}, bad = {0, 7}, neg = {-1, 0};
  EXPECT_THROW(confusion(a, b), std::invalid_argument);
  EXPECT_THROW(confusion(a, bad), std::invalid_argument);
  EXPECT_THROW(confusion(neg, a), std::invalid_argument);
  EXPECT_THROW(accuracy(ConfusionMatrix{}), std::invalid_argument);
  EXPECT_THROW(report(ConfusionMatrix{}), std::invalid_argument);
  const std::vector<Emotion> e = {Emotion::Sad, Emotion::Fear};
  EXPECT_EQ(confusion(e, e).trace(), 2u);
}

TEST(Confusion, MatchesPerSampleOracle) {
  const auto [t, p] = random_pairs(10000, 1);
  const auto r = report(confusion(t, p));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < t.size(); ++i) correct += t[i] == p[i];
  EXPECT_EQ(r.accuracy, static_cast<double>(correct) / 10000.0);
  for (int c = 0; c < 7; ++c) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      tp += t[i] == c && p[i] == c;
      fp += t[i] != c && p[i] == c;
      fn += t[i] == c && p[i] != c;
    }
    const double prec = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double rec = static_cast<double>(tp) / static_cast<double>(tp + fn);
    EXPECT_EQ(r.per_class[c].precision, prec);
    EXPECT_EQ(r.per_class[c].recall, rec);
    EXPECT_EQ(r.per_class[c].f1, 2 * prec * rec / (prec + rec));
    EXPECT_EQ(r.per_class[c].support, tp + fn);
  }
}

TEST(Confusion, PermutationInvariant) {
  auto [t, p] = random_pairs(500, 2);
  const auto before = confusion(t, p);
  std::vector<std::size_t> order(t.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(3);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<int> t2, p2;
  for (auto i : order) {
    t2.push_back(t[i]);
    p2.push_back(p[i]);
  }
  EXPECT_EQ(confusion(t2, p2), before);
}

TEST(Confusion, MicroAveragesEqualAccuracy) {
  const auto [t, p] = random_pairs(2000, 4);
  const auto m = confusion(t, p);
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t c = 0; c < 7; ++c) {
    tp += m.counts[c][c];
    fp += m.col_sum(c) - m.counts[c][c];
    fn += m.row_sum(c) - m.counts[c][c];
  }
  EXPECT_EQ(fp, fn);
  EXPECT_DOUBLE_EQ(double(tp) / double(tp + fp), accuracy(m));
}

TEST(F1, HarmonicMeanAndZeroCase) {
  EXPECT_DOUBLE_EQ(f1_score(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(f1_score(1.0, 1.0), 1.0);
  EXPECT_NEAR(f1_score(0.809, 0.758), 0.782, 1e-3);
  EXPECT_NEAR(f1_score(0.849, 0.816), 0.832, 1e-3);
}

TEST(F1, PublishedScoresRecompute) {
  // Thirteen of the fourteen published F1 values follow from their precision
  // and recall; Surprise without the sampler gives 0.845, not the listed 0.855.
  int consistent = 0;
  for (const auto& row : testkit::kPublishedScores) {
    for (const auto* s : {&row.without_sampler, &row.with_sampler}) {
      consistent += std::abs(f1_score(s->precision, s->recall) - s->f1) <= 1e-3;
    }
  }
  EXPECT_EQ(consistent, 13);
  const auto& surprise = testkit::kPublishedScores[6].without_sampler;
  EXPECT_NEAR(f1_score(surprise.precision, surprise.recall), 0.8454, 1e-4);
}

TEST(Render, ReportAndConfusionText) {
  ConfusionMatrix m;
  m.counts[0][0] = 3;
  m.counts[0][1] = 1;
  m.counts[3][3] = 5;
  const auto text = render_report_text(report(m));
  EXPECT_NE(text.find("Precision"), std::string::npos);
  EXPECT_NE(text.find("F1 Score"), std::string::npos);
  EXPECT_NE(text.find("0.750"), std::string::npos);
  EXPECT_NE(text.find("* undefined"), std::string::npos);
  const auto grid = render_confusion_text(m);
  EXPECT_EQ(grid.rfind("rows = true label", 0), 0u);
  EXPECT_NE(grid.find("Surprise"), std::string::npos);
}

TEST(Render, CsvAndJsonRoundTrip) {
  const auto [t, p] = random_pairs(300, 5);
  const auto m = confusion(t, p);
  EXPECT_EQ(confusion_from_json(to_json(m)), m);
  EXPECT_EQ(to_json(m)["orientation"], "rows=true,cols=predicted");
  const auto csv = confusion_csv(m);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
  EXPECT_EQ(csv.rfind("true\\predicted,Angry", 0), 0u);
  const auto j = to_json(report(m));
  EXPECT_DOUBLE_EQ(j["accuracy"].get<double>(), accuracy(m));
  EXPECT_TRUE(j["classes"].contains("Disgust"));
}

TEST(Render, HeatmapGeometryAndDeterminism) {
  const auto [t, p] = random_pairs(300, 6);
  const auto m = confusion(t, p);
  const auto img = confusion_heatmap(m, 32);
  EXPECT_EQ(img.width(), 9 * 32);
  EXPECT_EQ(img.height(), 9 * 32);
  EXPECT_EQ(img.channels(), 3);
  EXPECT_EQ(img, confusion_heatmap(m, 32));
  EXPECT_THROW(confusion_heatmap(m, 8), std::invalid_argument);
}

}  // namespace
}  // namespace ferkit
