#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfcm/checkpoint.hpp"
#include "mfcm/config.hpp"
#include "mfcm/features.hpp"
#include "mfcm/manifest.hpp"
#include "mfcm/metrics.hpp"
#include "mfcm/model.hpp"

namespace mfcm {

// Adam with bias correction. Holds first/second moment buffers per tensor.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Tensor> params, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step();
  void zero_grad();
  std::size_t steps() const { return steps_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t steps_ = 0;
};

struct FileScore {
  std::filesystem::path path;
  double score = 0.0;  // sigmoid of the logit, probability of "fake"
  int prediction = 0;
  int label = 0;
};

struct EvalResult {
  ConfusionMatrix confusion;
  Metrics metrics;
  std::vector<FileScore> scores;
};

inline constexpr double kDecisionThreshold = 0.5;

// Eval-mode scores for precomputed inputs (3 x H x W each).
std::vector<double> predict_scores(MfcmNet& model, const std::vector<Tensor>& inputs,
                                   std::size_t batch_size = 32);

EvalResult evaluate(MfcmNet& model, const FeatureExtractor& extractor,
                    const std::vector<ManifestEntry>& entries, std::size_t threads = 1,
                    std::size_t batch_size = 32);

// Loads a checkpoint and evaluates one split of the manifest. When
// `expected_features` is given, its DSP settings and input size must match
// the checkpoint's, otherwise CheckpointMismatch is thrown.
struct ExpectedFeatures {
  DspConfig dsp;
  std::size_t height = 0;
  std::size_t width = 0;
};
EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint, const Manifest& manifest,
                               Split split, const std::optional<ExpectedFeatures>& expected = std::nullopt,
                               std::size_t threads = 1);
void check_feature_compatibility(const LoadedCheckpoint& ckpt, const ExpectedFeatures& expected);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<Metrics> validation;  // absent when the split is empty
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  std::filesystem::path checkpoint;
  std::filesystem::path log_path;
};

struct TrainOptions {
  std::size_t threads = 1;
  // Called after every epoch; useful for progress output.
  std::function<void(const EpochRecord&)> on_epoch;
};

// Seeded mini-batch training with Adam on binary cross-entropy. Writes the
// best-validation-accuracy checkpoint and epoch_log.csv into out_dir.
TrainResult train(const Manifest& manifest, const MfcmNetConfig& model_config, const DspConfig& dsp,
                  const TrainConfig& train_config, const std::filesystem::path& out_dir,
                  const TrainOptions& options = {});

void write_epoch_log_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& log);
void write_scores_csv(const std::filesystem::path& path, const std::vector<FileScore>& scores);

}  // namespace mfcm
