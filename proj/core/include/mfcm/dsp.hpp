#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mfcm/fft.hpp"
#include "mfcm/tensor.hpp"
#include "mfcm/wav.hpp"

namespace mfcm {

// Dense row-major matrix used for spectrogram-shaped data.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

enum class WindowKind { Rectangular, Hann };

struct FramingConfig {
  std::size_t frame_len = 1024;
  std::size_t hop = 512;
  WindowKind window = WindowKind::Hann;
};

// Frame i covers samples [i*hop, i*hop + frame_len); the trailing partial
// frame is dropped. Throws SignalTooShort when fewer than frame_len samples.
std::vector<std::vector<double>> frame_signal(const AudioClip& clip, const FramingConfig& cfg);

std::size_t frame_count(std::size_t num_samples, const FramingConfig& cfg);

// Rectangular is the identity; Hann is the symmetric 0.5*(1 - cos(2*pi*n/(L-1))).
std::vector<double> apply_window(std::span<const double> frame, WindowKind kind);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct MelFilterBank {
  std::size_t n_mels = 0;
  std::size_t n_fft = 0;
  std::uint32_t sample_rate = 0;
  double fmin = 0.0;
  double fmax = 0.0;
  std::vector<double> center_hz;  // n_mels, strictly increasing
  Matrix weights;                 // n_mels x (n_fft/2 + 1)
};

// HTK-mel triangular filters with centres uniformly spaced in mel between
// mel(fmin) and mel(fmax). Throws InvalidFrequencyRange.
MelFilterBank build_mel_filterbank(std::size_t n_mels, std::size_t n_fft, std::uint32_t sample_rate,
                                   double fmin, double fmax);

enum class SpectrogramScale { Power, Decibel, Log };

struct MelSpectrogram {
  Matrix values;  // frames x mel bands
  SpectrogramScale scale = SpectrogramScale::Power;
  FramingConfig framing;
  std::uint32_t sample_rate = 0;

  std::size_t frames() const { return values.rows; }
  std::size_t bands() const { return values.cols; }
};

// window -> fft -> |X[k]|^2 for k in [0, n_fft/2] -> filterbank projection.
MelSpectrogram mel_spectrogram(const AudioClip& clip, const FramingConfig& framing,
                               const MelFilterBank& filterbank);

inline constexpr double kPowerFloor = 1e-10;

// 10*log10(max(v, floor) / v_max) clipped below at -top_db. A matrix whose
// maximum does not exceed the floor is all floor, i.e. uniformly -top_db.
MelSpectrogram to_db(const MelSpectrogram& ms, double top_db = 80.0);

enum class LogBase { Natural, Ten };

// Elementwise log(max(v, floor)) of a power-scale spectrogram.
MelSpectrogram to_log(const MelSpectrogram& ms, LogBase base = LogBase::Natural);

using MfccMatrix = Matrix;

// c(t, r) = sum_s log[X(t, s)] * cos(pi * r * (s + 0.5) / S), r < R, with no
// orthonormal scaling. Power-scale input is logged here (floored at
// kPowerFloor); Log-scale input is used as is.
MfccMatrix mfcc(const MelSpectrogram& mel, std::size_t num_coeffs, LogBase base = LogBase::Natural);

// Bilinear resize (corner aligned) of the transposed dB spectrogram, so rows
// index mel bands and columns index frames, then min-max normalisation to
// [0, 1] (all zeros when constant) replicated over three channels.
// Throws DegenerateInput when there are fewer than 2 frames or bands.
Tensor to_model_input(const MelSpectrogram& ms, std::size_t height, std::size_t width);

// Bilinear resize with corner alignment; exposed for testing.
Matrix resize_bilinear(const Matrix& m, std::size_t rows, std::size_t cols);

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

// 8-bit binary PGM (P5) with [-top_db, 0] mapped linearly onto [0, 255].
// Rows are mel bands (highest band first), columns are frames.
void write_spectrogram_pgm(const std::filesystem::path& path, const MelSpectrogram& db,
                           double top_db);

}  // namespace mfcm
