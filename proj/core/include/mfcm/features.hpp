#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "mfcm/config.hpp"
#include "mfcm/dsp.hpp"
#include "mfcm/tensor.hpp"
#include "mfcm/wav.hpp"

namespace mfcm {

// Every intermediate representation of one clip.
struct ClipAnalysis {
  MelSpectrogram power;
  MelSpectrogram decibel;
  MfccMatrix mfcc;
  Tensor input;  // 3 x height x width
};

// Turns clips into model inputs: resample -> mel power -> dB -> resized image.
// Immutable after construction; safe to call from several threads.
class FeatureExtractor {
 public:
  FeatureExtractor(DspConfig dsp, std::size_t height, std::size_t width,
                   std::filesystem::path cache_dir = {});

  const DspConfig& dsp() const { return dsp_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

  ClipAnalysis analyze(const AudioClip& clip) const;
  Tensor features(const AudioClip& clip) const;

  // Reads a WAV file, going through the on-disk cache when one is configured.
  // Cached and freshly computed features are bit-identical.
  Tensor features(const std::filesystem::path& wav_path) const;

  // Feature tensors in input order; extraction fans out over `threads`.
  std::vector<Tensor> features(const std::vector<std::filesystem::path>& wav_paths,
                               std::size_t threads) const;

  std::filesystem::path cache_path(const std::filesystem::path& wav_path) const;

 private:
  DspConfig dsp_;
  std::size_t height_;
  std::size_t width_;
  std::filesystem::path cache_dir_;
  MelFilterBank filterbank_;
  std::string config_fingerprint_;
};

// Stacks equally shaped C x H x W tensors into N x C x H x W.
Tensor stack_batch(const std::vector<Tensor>& items);

}  // namespace mfcm
