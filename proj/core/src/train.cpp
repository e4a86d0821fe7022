#include "mfcm/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "mfcm/error.hpp"
#include "mfcm/ops.hpp"
#include "mfcm/rng.hpp"

namespace mfcm {
namespace {

std::vector<std::filesystem::path> paths_of(const std::vector<ManifestEntry>& entries) {
  std::vector<std::filesystem::path> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.path);
  return out;
}

double logistic(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// Separate stream for shuffling so data order does not depend on how many
// numbers parameter initialisation consumed.
constexpr std::uint64_t kShuffleStream = 0x9e3779b97f4a7c15ULL;

}  // namespace

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double learning_rate, double beta1,
                             double beta2, double eps)
    : params_(std::move(params)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void AdamOptimizer::step() {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(beta1_, t);
  const double correction2 = 1.0 - std::pow(beta2_, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    auto values = p.data();
    const auto g = p.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

void AdamOptimizer::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

std::vector<double> predict_scores(MfcmNet& model, const std::vector<Tensor>& inputs,
                                   std::size_t batch_size) {
  std::vector<double> scores;
  scores.reserve(inputs.size());
  batch_size = std::max<std::size_t>(batch_size, 1);
  for (std::size_t start = 0; start < inputs.size(); start += batch_size) {
    const std::size_t end = std::min(inputs.size(), start + batch_size);
    const std::vector<Tensor> chunk(inputs.begin() + static_cast<std::ptrdiff_t>(start),
                                    inputs.begin() + static_cast<std::ptrdiff_t>(end));
    Tape tape(false);
    const Tensor logits = model.forward(tape, stack_batch(chunk), {NormMode::Eval});
    for (double z : logits.data()) scores.push_back(logistic(z));
  }
  return scores;
}

EvalResult evaluate(MfcmNet& model, const FeatureExtractor& extractor,
                    const std::vector<ManifestEntry>& entries, std::size_t threads,
                    std::size_t batch_size) {
  if (entries.empty()) throw EmptyInput("nothing to evaluate");
  const auto inputs = extractor.features(paths_of(entries), threads);
  const auto scores = predict_scores(model, inputs, batch_size);

  EvalResult result;
  std::vector<int> predictions, labels;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    FileScore fs;
    fs.path = entries[i].path;
    fs.score = scores[i];
    fs.prediction = scores[i] >= kDecisionThreshold ? 1 : 0;
    fs.label = static_cast<int>(entries[i].label);
    predictions.push_back(fs.prediction);
    labels.push_back(fs.label);
    result.scores.push_back(std::move(fs));
  }
  result.confusion = confusion(predictions, labels);
  result.metrics = metrics_from_confusion(result.confusion);
  return result;
}

void check_feature_compatibility(const LoadedCheckpoint& ckpt, const ExpectedFeatures& expected) {
  const auto& cfg = ckpt.model.config();
  if (cfg.input_height != expected.height || cfg.input_width != expected.width) {
    throw CheckpointMismatch("checkpoint expects " + std::to_string(cfg.input_height) + "x" +
                             std::to_string(cfg.input_width) + " inputs, features are " +
                             std::to_string(expected.height) + "x" + std::to_string(expected.width));
  }
  if (!(ckpt.dsp == expected.dsp)) {
    throw CheckpointMismatch("checkpoint was trained with different DSP settings: " + to_json(ckpt.dsp));
  }
}

EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint, const Manifest& manifest,
                               Split split, const std::optional<ExpectedFeatures>& expected,
                               std::size_t threads) {
  LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
  if (expected) check_feature_compatibility(ckpt, *expected);
  const FeatureExtractor extractor(ckpt.dsp, ckpt.model.config().input_height,
                                   ckpt.model.config().input_width);
  return evaluate(ckpt.model, extractor, manifest.select(split), threads);
}

TrainResult train(const Manifest& manifest, const MfcmNetConfig& model_config, const DspConfig& dsp,
                  const TrainConfig& train_config, const std::filesystem::path& out_dir,
                  const TrainOptions& options) {
  train_config.validate();
  const auto train_entries = manifest.select(Split::Training);
  if (train_entries.empty()) throw EmptyInput("manifest has no training entries");
  const auto val_entries = manifest.select(Split::Validation);

  std::filesystem::create_directories(out_dir);
  const FeatureExtractor extractor(dsp, model_config.input_height, model_config.input_width,
                                   train_config.cache_dir);
  // Features are computed once and reused by every epoch.
  const auto train_inputs = extractor.features(paths_of(train_entries), options.threads);
  const auto val_inputs = extractor.features(paths_of(val_entries), options.threads);

  MfcmNet model(model_config, train_config.seed);
  AdamOptimizer optimizer(model.parameters(), train_config.learning_rate, train_config.beta1,
                          train_config.beta2, train_config.adam_eps);
  Rng shuffle_rng(train_config.seed ^ kShuffleStream);

  TrainResult result;
  result.checkpoint = out_dir / train_config.checkpoint;
  result.log_path = out_dir / "epoch_log.csv";
  std::optional<double> best_accuracy;

  std::vector<std::size_t> order(train_entries.size());
  for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += train_config.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + train_config.batch_size);
      std::vector<Tensor> items;
      Tensor labels(Shape{end - start, 1});
      for (std::size_t i = start; i < end; ++i) {
        items.push_back(train_inputs[order[i]]);
        labels.data()[i - start] = static_cast<double>(train_entries[order[i]].label);
      }
      try {
        Tape tape;
        const Tensor logits = model.forward(tape, stack_batch(items), {NormMode::Train});
        const Tensor loss = bce_with_logits(tape, logits, labels);
        tape.backward(loss);
        optimizer.step();
        optimizer.zero_grad();
        loss_sum += loss.item() * static_cast<double>(end - start);
      } catch (const NumericalFault& e) {
        throw NumericalFault("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                             " (first file " + train_entries[order[start]].path.string() +
                             "): " + e.what());
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(order.size());
    double accuracy = -record.train_loss;  // selection score when there is no validation split
    if (!val_inputs.empty()) {
      const auto scores = predict_scores(model, val_inputs, train_config.batch_size);
      std::vector<int> predictions, labels;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        predictions.push_back(scores[i] >= kDecisionThreshold ? 1 : 0);
        labels.push_back(static_cast<int>(val_entries[i].label));
      }
      record.validation = metrics_from_confusion(confusion(predictions, labels));
      accuracy = record.validation->accuracy;
    }
    if (!best_accuracy || accuracy > *best_accuracy) {
      best_accuracy = accuracy;
      result.best_epoch = epoch;
      save_checkpoint(result.checkpoint, model, dsp);
    }
    result.log.push_back(record);
    write_epoch_log_csv(result.log_path, result.log);
    if (options.on_epoch) options.on_epoch(record);
  }
  return result;
}

void write_epoch_log_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,train_loss,val_accuracy,val_precision,val_recall,val_f1_standard,val_f1_half\n";
  for (const auto& r : log) {
    const Metrics m = r.validation.value_or(Metrics{});
    const auto field = [&](std::optional<double> v) {
      return r.validation ? format_metric(v) : std::string("undefined");
    };
    out << r.epoch << ',' << format_metric(r.train_loss) << ',' << field(m.accuracy) << ','
        << field(m.precision) << ',' << field(m.recall) << ',' << field(m.f1_standard) << ','
        << field(m.f1_half) << '\n';
  }
}

void write_scores_csv(const std::filesystem::path& path, const std::vector<FileScore>& scores) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "path,score,prediction,label\n";
  for (const auto& s : scores) {
    out << s.path.generic_string() << ',' << format_metric(s.score) << ','
        << (s.prediction ? "fake" : "real") << ',' << (s.label ? "fake" : "real") << '\n';
  }
}

}  // namespace mfcm
