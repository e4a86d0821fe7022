#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

namespace mfcm {

// Binary confusion counts with fake = 1 as the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

// Throws LengthMismatch, EmptyInput, or std::invalid_argument for values
// outside {0, 1}.
ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels);

// A metric with a zero denominator is std::nullopt, never NaN.
struct Metrics {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1_standard;  // 2PR / (P + R)
  std::optional<double> f1_half;     // PR / (P + R), without the factor 2
};

// Throws EmptyInput when the matrix has no samples.
Metrics metrics_from_confusion(const ConfusionMatrix& cm);

// "%.17g", or "undefined" for a missing value.
std::string format_metric(std::optional<double> value);

}  // namespace mfcm
