#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "mfcm/dsp.hpp"
#include "mfcm/model.hpp"

namespace mfcm {

// Front-end settings. Clips are resampled to sample_rate before framing.
struct DspConfig {
  std::uint32_t sample_rate = 16000;
  std::size_t frame_len = 1024;
  std::size_t hop = 512;
  WindowKind window = WindowKind::Hann;
  std::size_t n_mels = 64;
  double fmin = 0.0;
  std::optional<double> fmax;  // Nyquist when unset
  double top_db = 80.0;
  std::size_t n_mfcc = 20;
  LogBase mfcc_log = LogBase::Natural;

  FramingConfig framing() const { return {frame_len, hop, window}; }
  double effective_fmax() const { return fmax.value_or(sample_rate / 2.0); }
  void validate() const;
  bool operator==(const DspConfig&) const = default;
};

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1337;
  std::string checkpoint = "model.mfck";
  // Directory for cached feature tensors; empty disables the disk cache.
  std::string cache_dir;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct RunConfig {
  DspConfig dsp;
  MfcmNetConfig model;
  TrainConfig train;
};

// Strict parsers: unknown keys, wrong types and invalid values raise
// ConfigInvalid. Absent sections and keys keep their defaults.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

DspConfig parse_dsp_config(std::string_view json_text);
MfcmNetConfig parse_model_config(std::string_view json_text);

std::string to_json(const DspConfig& cfg);
std::string to_json(const MfcmNetConfig& cfg);
std::string to_json(const TrainConfig& cfg);
std::string to_json(const RunConfig& cfg);

// 64-bit FNV-1a, stable across platforms; used for cache keys.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace mfcm
