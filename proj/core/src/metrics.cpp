#include "mfcm/metrics.hpp"

#include <cstdio>
#include <stdexcept>

#include "mfcm/error.hpp"

namespace mfcm {

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw LengthMismatch(std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) throw EmptyInput("confusion matrix of zero samples");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i];
    const int y = labels[i];
    if ((p != 0 && p != 1) || (y != 0 && y != 1)) {
      throw std::invalid_argument("predictions and labels must be 0 or 1");
    }
    if (p == 1 && y == 1) ++cm.tp;
    else if (p == 1) ++cm.fp;
    else if (y == 1) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

Metrics metrics_from_confusion(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw EmptyInput("metrics of an empty confusion matrix");
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  Metrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    const double p = *m.precision;
    const double r = *m.recall;
    m.f1_half = p * r / (p + r);
    m.f1_standard = 2.0 * p * r / (p + r);
  }
  return m;
}

std::string format_metric(std::optional<double> value) {
  if (!value) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", *value);
  return buf;
}

}  // namespace mfcm
