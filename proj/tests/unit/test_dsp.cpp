#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

#include "mfcm/dsp.hpp"
#include "mfcm/error.hpp"
#include "mfcm/rng.hpp"
#include "oracles.hpp"
#include "synthetic_corpus.hpp"

namespace {

using namespace mfcm;

AudioClip constant_clip(std::size_t n, double value, std::uint32_t rate = 16000) {
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.assign(n, value);
  return clip;
}

AudioClip tone(double hz, std::size_t n, std::uint32_t rate = 16000) {
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) clip.samples[i] = std::sin(2.0 * std::numbers::pi * hz * i / rate);
  return clip;
}

MelSpectrogram power_matrix(const Matrix& m) {
  MelSpectrogram ms;
  ms.values = m;
  ms.scale = SpectrogramScale::Power;
  ms.sample_rate = 16000;
  return ms;
}

TEST(Framing, FrameStartsFollowHop) {
  AudioClip clip;
  clip.sample_rate = 8000;
  for (int i = 0; i < 10; ++i) clip.samples.push_back(i);
  const auto frames = frame_signal(clip, {4, 2, WindowKind::Rectangular});
  ASSERT_EQ(frames.size(), 4u);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    EXPECT_EQ(frames[i].front(), 2.0 * i);
    EXPECT_EQ(frames[i].size(), 4u);
  }
  EXPECT_EQ(frame_count(10, {4, 2, WindowKind::Rectangular}), 4u);
}

TEST(Framing, ShortSignalIsRejected) {
  EXPECT_THROW(frame_signal(constant_clip(3, 1.0), {4, 2, WindowKind::Hann}), SignalTooShort);
}

TEST(Window, HannOfOnes) {
  const std::vector<double> ones(4, 1.0);
  const auto w = apply_window(ones, WindowKind::Hann);
  const std::vector<double> expected = {0.0, 0.75, 0.75, 0.0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(w[i], expected[i], 1e-15);
  EXPECT_EQ(apply_window(ones, WindowKind::Rectangular), ones);
}

TEST(Mel, ScaleConversion) {
  EXPECT_NEAR(hz_to_mel(700.0), 2595.0 * std::log10(2.0), 1e-9);
  EXPECT_NEAR(hz_to_mel(700.0), 781.17, 0.01);
  for (double hz : {0.0, 100.0, 4000.0, 8000.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(hz)), hz, 1e-9);
}

TEST(MelFilterBank, NoEmptyRowsAtDefaults) {
  const auto fb = build_mel_filterbank(64, 1024, 16000, 0.0, 8000.0);
  ASSERT_EQ(fb.weights.rows, 64u);
  ASSERT_EQ(fb.weights.cols, 513u);
  for (std::size_t r = 0; r < fb.weights.rows; ++r) {
    const auto row = fb.weights.row(r);
    EXPECT_GT(*std::max_element(row.begin(), row.end()), 0.0) << "filter " << r;
  }
  for (std::size_t r = 1; r < fb.center_hz.size(); ++r) EXPECT_GT(fb.center_hz[r], fb.center_hz[r - 1]);
}

TEST(MelFilterBank, InvalidRanges) {
  EXPECT_THROW(build_mel_filterbank(64, 1024, 16000, 4000.0, 2000.0), InvalidFrequencyRange);
  EXPECT_THROW(build_mel_filterbank(64, 1024, 16000, 0.0, 9000.0), InvalidFrequencyRange);
  // Far more filters than bins leaves some filters without support.
  EXPECT_THROW(build_mel_filterbank(200, 64, 16000, 0.0, 8000.0), InvalidFrequencyRange);
}

TEST(MelSpectrogram, ShapeForDefaults) {
  const auto fb = build_mel_filterbank(64, 1024, 16000, 0.0, 8000.0);
  const auto ms = mel_spectrogram(tone(440.0, 16384), {}, fb);
  EXPECT_EQ(ms.frames(), 31u);
  EXPECT_EQ(ms.bands(), 64u);
}

TEST(MelSpectrogram, ToneAtCentreDominatesItsBand) {
  const auto fb = build_mel_filterbank(64, 1024, 16000, 0.0, 8000.0);
  for (std::size_t band : {10u, 30u, 50u}) {
    const auto ms = mel_spectrogram(tone(fb.center_hz[band], 8192), {}, fb);
    for (std::size_t t = 0; t < ms.frames(); ++t) {
      const auto row = ms.values.row(t);
      const auto argmax = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      EXPECT_EQ(argmax, band) << "frame " << t;
    }
  }
}

TEST(ToDb, KnownValues) {
  Matrix m(1, 2);
  m(0, 0) = 1.0;
  m(0, 1) = 0.1;
  const auto db = to_db(power_matrix(m));
  EXPECT_EQ(db.scale, SpectrogramScale::Decibel);
  EXPECT_NEAR(db.values(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(db.values(0, 1), -10.0, 1e-12);
}

TEST(ToDb, ConstantMatrixIsZero) {
  const auto db = to_db(power_matrix(Matrix(3, 4, 0.37)));
  for (double v : db.values.values) EXPECT_EQ(v, 0.0);
}

TEST(ToDb, SilenceIsFloor) {
  const auto db = to_db(power_matrix(Matrix(3, 4, 0.0)), 80.0);
  for (double v : db.values.values) EXPECT_EQ(v, -80.0);
}

TEST(ToDb, RangeIsBounded) {
  Rng rng(11);
  Matrix m(10, 16);
  for (double& v : m.values) v = std::pow(10.0, rng.uniform(-14.0, 2.0));
  const auto db = to_db(power_matrix(m), 80.0);
  for (double v : db.values.values) {
    EXPECT_GE(v, -80.0);
    EXPECT_LE(v, 0.0);
  }
}

TEST(Mfcc, FirstCoefficientIsSumOfLogs) {
  Rng rng(12);
  Matrix m(4, 9);
  for (double& v : m.values) v = rng.uniform(0.01, 5.0);
  const auto c = mfcc(power_matrix(m), 5);
  ASSERT_EQ(c.rows, 4u);
  ASSERT_EQ(c.cols, 5u);
  for (std::size_t t = 0; t < 4; ++t) {
    double s = 0.0;
    for (std::size_t j = 0; j < 9; ++j) s += std::log(m(t, j));
    EXPECT_NEAR(c(t, 0), s, 1e-12);
  }
}

TEST(Mfcc, ConstantERow) {
  const std::size_t bands = 12;
  const auto c = mfcc(power_matrix(Matrix(2, bands, std::numbers::e)), 6);
  for (std::size_t t = 0; t < 2; ++t) {
    EXPECT_NEAR(c(t, 0), static_cast<double>(bands), 1e-12);
    for (std::size_t r = 1; r < 6; ++r) EXPECT_NEAR(c(t, r), 0.0, 1e-12);
  }
}

TEST(Mfcc, MatchesDoubleLoopReference) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t t_count = 1 + rng.below(16), s_count = 1 + rng.below(16);
    const std::size_t r_count = 1 + rng.below(s_count);
    Matrix m(t_count, s_count);
    std::vector<std::vector<double>> rows(t_count, std::vector<double>(s_count));
    for (std::size_t t = 0; t < t_count; ++t)
      for (std::size_t s = 0; s < s_count; ++s) m(t, s) = rows[t][s] = rng.uniform(0.001, 10.0);
    const auto got = mfcc(power_matrix(m), r_count);
    const auto want = testkit::reference_mfcc(rows, r_count);
    for (std::size_t t = 0; t < t_count; ++t)
      for (std::size_t r = 0; r < r_count; ++r) EXPECT_NEAR(got(t, r), want[t][r], 1e-9);
  }
}

TEST(Mfcc, LogInputIsUsedAsIs) {
  Rng rng(14);
  Matrix m(3, 8);
  for (double& v : m.values) v = rng.uniform(0.01, 5.0);
  const auto from_power = mfcc(power_matrix(m), 4);
  const auto from_log = mfcc(to_log(power_matrix(m)), 4);
  for (std::size_t i = 0; i < from_power.values.size(); ++i)
    EXPECT_NEAR(from_power.values[i], from_log.values[i], 1e-12);
}

TEST(Resize, CentreOfCheckerboard) {
  Matrix m(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  const auto r = resize_bilinear(m, 3, 3);
  EXPECT_NEAR(r(1, 1), 0.5, 1e-15);
  EXPECT_EQ(r(0, 0), 0.0);
  EXPECT_EQ(r(0, 2), 1.0);
  EXPECT_EQ(r(2, 0), 1.0);
}

TEST(ModelInput, DefaultShapeAndRange) {
  const auto fb = build_mel_filterbank(64, 1024, 16000, 0.0, 8000.0);
  const auto db = to_db(mel_spectrogram(tone(440.0, 16384), {}, fb));
  const auto x = to_model_input(db, 224, 224);
  EXPECT_EQ(x.shape(), (Shape{3, 224, 224}));
  const auto [lo, hi] = std::minmax_element(x.data().begin(), x.data().end());
  EXPECT_EQ(*lo, 0.0);
  EXPECT_EQ(*hi, 1.0);
  // Channels are replicas.
  const std::size_t plane = 224 * 224;
  for (std::size_t i = 0; i < plane; ++i) {
    EXPECT_EQ(x.data()[i], x.data()[plane + i]);
    EXPECT_EQ(x.data()[i], x.data()[2 * plane + i]);
  }
}

TEST(ModelInput, ConstantInputIsZero) {
  MelSpectrogram ms = power_matrix(Matrix(5, 6, -3.0));
  ms.scale = SpectrogramScale::Decibel;
  const auto x = to_model_input(ms, 8, 8);
  for (double v : x.data()) EXPECT_EQ(v, 0.0);
}

TEST(ModelInput, RejectsDegenerate) {
  MelSpectrogram ms = power_matrix(Matrix(1, 6, 0.0));
  ms.scale = SpectrogramScale::Decibel;
  EXPECT_THROW(to_model_input(ms, 8, 8), DegenerateInput);
}

TEST(Pgm, SilentClipIsBlack) {
  const auto dir = testkit::scratch_dir("pgm");
  const auto fb = build_mel_filterbank(16, 256, 16000, 0.0, 8000.0);
  const auto db = to_db(mel_spectrogram(constant_clip(2048, 0.0), {256, 128, WindowKind::Hann}, fb));
  write_spectrogram_pgm(dir / "s.pgm", db, 80.0);
  std::ifstream in(dir / "s.pgm", std::ios::binary);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(w, db.frames());
  EXPECT_EQ(h, 16u);
  std::vector<char> pixels(w * h);
  in.read(pixels.data(), static_cast<std::streamsize>(pixels.size()));
  ASSERT_TRUE(in);
  for (char p : pixels) EXPECT_EQ(p, 0);
}

}  // namespace
