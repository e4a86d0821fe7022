#include <gtest/gtest.h>

#include <vector>

#include "mfcm/error.hpp"
#include "mfcm/metrics.hpp"
#include "mfcm/rng.hpp"

namespace {

using namespace mfcm;

TEST(Confusion, FixtureCounts) {
  const std::vector<int> preds = {1, 1, 1, 0, 0, 0, 0, 1, 0, 0};
  const std::vector<int> labels = {1, 1, 0, 1, 0, 0, 0, 1, 1, 0};
  const auto cm = confusion(preds, labels);
  EXPECT_EQ(cm.tp, 3u);
  EXPECT_EQ(cm.fp, 1u);
  EXPECT_EQ(cm.fn, 2u);
  EXPECT_EQ(cm.tn, 4u);
}

TEST(Confusion, InvalidInputs) {
  const std::vector<int> a = {0, 1}, b = {0};
  EXPECT_THROW(confusion(a, b), LengthMismatch);
  EXPECT_THROW(confusion(std::vector<int>{}, std::vector<int>{}), EmptyInput);
  EXPECT_THROW(confusion(std::vector<int>{2}, std::vector<int>{0}), std::invalid_argument);
}

TEST(Metrics, FixtureValues) {
  const auto m = metrics_from_confusion({3, 4, 1, 2});
  EXPECT_DOUBLE_EQ(m.accuracy, 0.7);
  EXPECT_DOUBLE_EQ(*m.precision, 0.75);
  EXPECT_DOUBLE_EQ(*m.recall, 0.6);
  EXPECT_NEAR(*m.f1_standard, 0.6667, 1e-4);
  EXPECT_NEAR(*m.f1_half, 0.3333, 1e-4);
}

TEST(Metrics, UndefinedPrecision) {
  const auto m = metrics_from_confusion({0, 5, 0, 3});
  EXPECT_FALSE(m.precision.has_value());
  EXPECT_TRUE(m.recall.has_value());
  EXPECT_EQ(*m.recall, 0.0);
  EXPECT_FALSE(m.f1_standard.has_value());
  EXPECT_FALSE(m.f1_half.has_value());
  EXPECT_EQ(format_metric(m.precision), "undefined");
}

TEST(Metrics, AllZeroIsEmpty) { EXPECT_THROW(metrics_from_confusion({}), EmptyInput); }

TEST(Metrics, F1VariantsDifferByFactorTwo) {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const ConfusionMatrix cm{1 + rng.below(100), rng.below(100), rng.below(100), rng.below(100)};
    const auto m = metrics_from_confusion(cm);
    ASSERT_TRUE(m.f1_standard && m.f1_half);
    EXPECT_NEAR(*m.f1_standard, 2.0 * *m.f1_half, 1e-12);
    EXPECT_GE(m.accuracy, 0.0);
    EXPECT_LE(m.accuracy, 1.0);
  }
}

TEST(Metrics, FormatIsRoundTrippable) {
  EXPECT_EQ(std::stod(format_metric(0.1)), 0.1);
}

}  // namespace
