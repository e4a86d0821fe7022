#include "mfcm/features.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <thread>

#include "mfcm/error.hpp"
#include "mfcm/tensor_io.hpp"

namespace mfcm {

FeatureExtractor::FeatureExtractor(DspConfig dsp, std::size_t height, std::size_t width,
                                   std::filesystem::path cache_dir)
    : dsp_(std::move(dsp)), height_(height), width_(width), cache_dir_(std::move(cache_dir)) {
  dsp_.validate();
  filterbank_ = build_mel_filterbank(dsp_.n_mels, dsp_.frame_len, dsp_.sample_rate, dsp_.fmin,
                                     dsp_.effective_fmax());
  config_fingerprint_ =
      to_json(dsp_) + "|" + std::to_string(height_) + "x" + std::to_string(width_);
}

ClipAnalysis FeatureExtractor::analyze(const AudioClip& clip) const {
  const AudioClip resampled = resample_linear(clip, dsp_.sample_rate);
  ClipAnalysis out;
  out.power = mel_spectrogram(resampled, dsp_.framing(), filterbank_);
  out.decibel = to_db(out.power, dsp_.top_db);
  out.mfcc = mfcc(out.power, dsp_.n_mfcc, dsp_.mfcc_log);
  out.input = to_model_input(out.decibel, height_, width_);
  return out;
}

Tensor FeatureExtractor::features(const AudioClip& clip) const {
  const AudioClip resampled = resample_linear(clip, dsp_.sample_rate);
  const auto db = to_db(mel_spectrogram(resampled, dsp_.framing(), filterbank_), dsp_.top_db);
  return to_model_input(db, height_, width_);
}

std::filesystem::path FeatureExtractor::cache_path(const std::filesystem::path& wav_path) const {
  const std::uint64_t key = fnv1a64(config_fingerprint_ + "|" + wav_path.generic_string());
  char name[32];
  std::snprintf(name, sizeof(name), "%016llx.mfct", static_cast<unsigned long long>(key));
  return cache_dir_ / name;
}

Tensor FeatureExtractor::features(const std::filesystem::path& wav_path) const {
  if (cache_dir_.empty()) return features(read_wav_file(wav_path).second);

  const auto cached = cache_path(wav_path);
  if (std::filesystem::exists(cached)) {
    try {
      Tensor t = load_tensor(cached);
      if (t.shape() == Shape{3, height_, width_}) return t;
    } catch (const Error&) {
      // Unreadable cache entries are recomputed and overwritten.
    }
  }
  Tensor t = features(read_wav_file(wav_path).second);
  std::filesystem::create_directories(cache_dir_);
  // Write to a private name first so concurrent readers never see a torn file.
  auto tmp = cached;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  save_tensor(tmp, t, DType::Float64);
  std::filesystem::rename(tmp, cached);
  return t;
}

std::vector<Tensor> FeatureExtractor::features(const std::vector<std::filesystem::path>& wav_paths,
                                               std::size_t threads) const {
  std::vector<Tensor> out(wav_paths.size());
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(wav_paths.size(), 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < wav_paths.size(); ++i) out[i] = features(wav_paths[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(wav_paths.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < wav_paths.size(); i = next++) {
          try {
            out[i] = features(wav_paths[i]);
          } catch (...) {
            failures[i] = std::current_exception();
          }
        }
      });
    }
  }
  // Report the first failing file in input order, independent of scheduling.
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

Tensor stack_batch(const std::vector<Tensor>& items) {
  if (items.empty()) throw EmptyInput("cannot stack an empty batch");
  const Shape& item_shape = items.front().shape();
  Shape shape{items.size()};
  shape.insert(shape.end(), item_shape.begin(), item_shape.end());
  Tensor out(shape);
  auto dst = out.data();
  const std::size_t stride = items.front().numel();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].shape() != item_shape) throw ShapeMismatch("stack_batch: ragged batch");
    std::copy(items[i].data().begin(), items[i].data().end(),
              dst.begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return out;
}

}  // namespace mfcm
