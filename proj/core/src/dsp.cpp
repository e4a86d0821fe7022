#include "mfcm/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

#include "mfcm/error.hpp"

namespace mfcm {

std::size_t frame_count(std::size_t num_samples, const FramingConfig& cfg) {
  if (num_samples < cfg.frame_len) return 0;
  return (num_samples - cfg.frame_len) / cfg.hop + 1;
}

std::vector<std::vector<double>> frame_signal(const AudioClip& clip, const FramingConfig& cfg) {
  if (cfg.hop == 0 || cfg.hop > cfg.frame_len) {
    throw ConfigInvalid("framing requires 0 < hop <= frame_len");
  }
  if (clip.samples.size() < cfg.frame_len) {
    throw SignalTooShort("signal of " + std::to_string(clip.samples.size()) +
                         " samples is shorter than one frame of " + std::to_string(cfg.frame_len));
  }
  const std::size_t count = frame_count(clip.samples.size(), cfg);
  std::vector<std::vector<double>> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto begin = clip.samples.begin() + static_cast<std::ptrdiff_t>(i * cfg.hop);
    frames.emplace_back(begin, begin + static_cast<std::ptrdiff_t>(cfg.frame_len));
  }
  return frames;
}

std::vector<double> apply_window(std::span<const double> frame, WindowKind kind) {
  std::vector<double> out(frame.begin(), frame.end());
  if (kind == WindowKind::Rectangular || out.size() < 2) return out;
  const double denom = static_cast<double>(out.size() - 1);
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] *= 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom));
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterBank build_mel_filterbank(std::size_t n_mels, std::size_t n_fft, std::uint32_t sample_rate,
                                   double fmin, double fmax) {
  const double nyquist = sample_rate / 2.0;
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= nyquist)) {
    throw InvalidFrequencyRange("need 0 <= fmin < fmax <= sample_rate/2");
  }
  if (n_mels < 2 || n_fft < 2) throw InvalidFrequencyRange("need n_mels >= 2 and n_fft >= 2");

  MelFilterBank fb;
  fb.n_mels = n_mels;
  fb.n_fft = n_fft;
  fb.sample_rate = sample_rate;
  fb.fmin = fmin;
  fb.fmax = fmax;

  // n_mels + 2 edge points: filter m spans points m .. m+2, peaking at m+1.
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n_mels + 1));
  }

  const std::size_t bins = n_fft / 2 + 1;
  fb.weights = Matrix(n_mels, bins);
  fb.center_hz.resize(n_mels);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m];
    const double centre = edges[m + 1];
    const double hi = edges[m + 2];
    fb.center_hz[m] = centre;
    bool any_positive = false;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      const double rising = (f - lo) / (centre - lo);
      const double falling = (hi - f) / (hi - centre);
      const double w = std::max(0.0, std::min(rising, falling));
      fb.weights(m, k) = w;
      any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) {
      throw InvalidFrequencyRange("mel filter " + std::to_string(m) +
                                  " covers no FFT bin; use fewer mel bands or a longer FFT");
    }
  }
  return fb;
}

MelSpectrogram mel_spectrogram(const AudioClip& clip, const FramingConfig& framing,
                               const MelFilterBank& filterbank) {
  if (filterbank.n_fft != framing.frame_len) {
    throw ShapeMismatch("filterbank n_fft must equal frame_len");
  }
  const auto frames = frame_signal(clip, framing);
  const FftPlan<double> plan(framing.frame_len);
  const std::size_t bins = framing.frame_len / 2 + 1;

  MelSpectrogram out;
  out.values = Matrix(frames.size(), filterbank.n_mels);
  out.scale = SpectrogramScale::Power;
  out.framing = framing;
  out.sample_rate = clip.sample_rate;

  std::vector<double> power(bins);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto windowed = apply_window(frames[t], framing.window);
    const auto spectrum = plan.forward(windowed);
    for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(spectrum[k]);
    for (std::size_t m = 0; m < filterbank.n_mels; ++m) {
      const auto w = filterbank.weights.row(m);
      double acc = 0.0;
      for (std::size_t k = 0; k < bins; ++k) acc += w[k] * power[k];
      out.values(t, m) = acc;
    }
  }
  return out;
}

MelSpectrogram to_db(const MelSpectrogram& ms, double top_db) {
  if (ms.scale != SpectrogramScale::Power) throw DegenerateInput("to_db expects a power spectrogram");
  MelSpectrogram out = ms;
  out.scale = SpectrogramScale::Decibel;
  double vmax = 0.0;
  for (double v : ms.values.values) vmax = std::max(vmax, v);
  if (vmax <= kPowerFloor) {
    std::fill(out.values.values.begin(), out.values.values.end(), -top_db);
    return out;
  }
  for (double& v : out.values.values) {
    v = std::max(10.0 * std::log10(std::max(v, kPowerFloor) / vmax), -top_db);
  }
  return out;
}

MelSpectrogram to_log(const MelSpectrogram& ms, LogBase base) {
  if (ms.scale != SpectrogramScale::Power) throw DegenerateInput("to_log expects a power spectrogram");
  MelSpectrogram out = ms;
  out.scale = SpectrogramScale::Log;
  for (double& v : out.values.values) {
    const double floored = std::max(v, kPowerFloor);
    v = base == LogBase::Natural ? std::log(floored) : std::log10(floored);
  }
  return out;
}

MfccMatrix mfcc(const MelSpectrogram& mel, std::size_t num_coeffs, LogBase base) {
  if (mel.scale == SpectrogramScale::Decibel) {
    throw DegenerateInput("mfcc expects a power or log spectrogram");
  }
  const std::size_t bands = mel.bands();
  if (num_coeffs > bands) {
    throw ShapeMismatch("mfcc: " + std::to_string(num_coeffs) + " coefficients from " +
                        std::to_string(bands) + " bands");
  }
  const MelSpectrogram logged = mel.scale == SpectrogramScale::Log ? mel : to_log(mel, base);

  Matrix basis(num_coeffs, bands);
  for (std::size_t r = 0; r < num_coeffs; ++r) {
    for (std::size_t s = 0; s < bands; ++s) {
      basis(r, s) = std::cos(std::numbers::pi * static_cast<double>(r) *
                             (static_cast<double>(s) + 0.5) / static_cast<double>(bands));
    }
  }
  MfccMatrix out(mel.frames(), num_coeffs);
  for (std::size_t t = 0; t < mel.frames(); ++t) {
    const auto row = logged.values.row(t);
    for (std::size_t r = 0; r < num_coeffs; ++r) {
      double acc = 0.0;
      for (std::size_t s = 0; s < bands; ++s) acc += row[s] * basis(r, s);
      out(t, r) = acc;
    }
  }
  return out;
}

Matrix resize_bilinear(const Matrix& m, std::size_t rows, std::size_t cols) {
  if (m.rows < 2 || m.cols < 2) throw DegenerateInput("bilinear resize needs at least 2x2 input");
  Matrix out(rows, cols);
  const auto source_coord = [](std::size_t i, std::size_t out_n, std::size_t in_n) {
    return out_n <= 1 ? 0.0
                      : static_cast<double>(i) * static_cast<double>(in_n - 1) /
                            static_cast<double>(out_n - 1);
  };
  for (std::size_t i = 0; i < rows; ++i) {
    const double y = source_coord(i, rows, m.rows);
    const std::size_t y0 = std::min(static_cast<std::size_t>(y), m.rows - 2);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t j = 0; j < cols; ++j) {
      const double x = source_coord(j, cols, m.cols);
      const std::size_t x0 = std::min(static_cast<std::size_t>(x), m.cols - 2);
      const double fx = x - static_cast<double>(x0);
      const double top = m(y0, x0) * (1.0 - fx) + m(y0, x0 + 1) * fx;
      const double bottom = m(y0 + 1, x0) * (1.0 - fx) + m(y0 + 1, x0 + 1) * fx;
      out(i, j) = top * (1.0 - fy) + bottom * fy;
    }
  }
  return out;
}

Tensor to_model_input(const MelSpectrogram& ms, std::size_t height, std::size_t width) {
  if (ms.frames() < 2 || ms.bands() < 2) {
    throw DegenerateInput("spectrogram of " + std::to_string(ms.frames()) + "x" +
                          std::to_string(ms.bands()) + " is too small to resize");
  }
  Matrix bands_by_time(ms.bands(), ms.frames());
  for (std::size_t t = 0; t < ms.frames(); ++t) {
    for (std::size_t s = 0; s < ms.bands(); ++s) bands_by_time(s, t) = ms.values(t, s);
  }
  Matrix image = resize_bilinear(bands_by_time, height, width);

  const auto [lo_it, hi_it] = std::minmax_element(image.values.begin(), image.values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  for (double& v : image.values) v = range > 0.0 ? (v - lo) / range : 0.0;

  Tensor out(Shape{3, height, width});
  auto data = out.data();
  for (std::size_t c = 0; c < 3; ++c) {
    std::copy(image.values.begin(), image.values.end(),
              data.begin() + static_cast<std::ptrdiff_t>(c * height * width));
  }
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[32];
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.9g", m(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

void write_spectrogram_pgm(const std::filesystem::path& path, const MelSpectrogram& db,
                           double top_db) {
  if (db.scale != SpectrogramScale::Decibel) {
    throw DegenerateInput("PGM export expects a decibel spectrogram");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t width = db.frames();
  const std::size_t height = db.bands();
  out << "P5\n" << width << ' ' << height << "\n255\n";
  std::vector<unsigned char> row(width);
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t band = height - 1 - r;
    for (std::size_t t = 0; t < width; ++t) {
      const double scaled = (db.values(t, band) + top_db) / top_db * 255.0;
      row[t] = static_cast<unsigned char>(std::lround(std::clamp(scaled, 0.0, 255.0)));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(width));
  }
}

}  // namespace mfcm
