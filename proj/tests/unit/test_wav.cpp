#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <vector>

#include "mfcm/error.hpp"
#include "mfcm/rng.hpp"
#include "mfcm/wav.hpp"

namespace {

using namespace mfcm;

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back(v >> 8);
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

// Hand-assembled canonical header, independent of encode_wav.
std::vector<std::uint8_t> pcm16_file(std::uint16_t channels, std::uint32_t rate,
                                     const std::vector<std::int16_t>& samples) {
  std::vector<std::uint8_t> b;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  for (char c : std::string("RIFF")) b.push_back(c);
  put_u32(b, 36 + data_bytes);
  for (char c : std::string("WAVEfmt ")) b.push_back(c);
  put_u32(b, 16);
  put_u16(b, 1);
  put_u16(b, channels);
  put_u32(b, rate);
  put_u32(b, rate * channels * 2);
  put_u16(b, channels * 2);
  put_u16(b, 16);
  for (char c : std::string("data")) b.push_back(c);
  put_u32(b, data_bytes);
  for (std::int16_t s : samples) put_u16(b, static_cast<std::uint16_t>(s));
  return b;
}

TEST(WavParse, DecodesKnownMonoSamples) {
  const auto bytes = pcm16_file(1, 8000, {0, 16384, -16384, 32767});
  ASSERT_EQ(bytes.size(), 44u + 8u);
  const auto [info, clip] = parse_wav(bytes);
  EXPECT_EQ(info.num_channels, 1);
  EXPECT_EQ(info.bits_per_sample, 16);
  EXPECT_EQ(clip.sample_rate, 8000u);
  ASSERT_EQ(clip.samples.size(), 4u);
  EXPECT_EQ(clip.samples[0], 0.0);
  EXPECT_EQ(clip.samples[1], 0.5);
  EXPECT_EQ(clip.samples[2], -0.5);
  EXPECT_EQ(clip.samples[3], 32767.0 / 32768.0);
}

TEST(WavParse, StereoWithIdenticalChannelsEqualsEitherChannel) {
  const std::vector<std::int16_t> mono = {100, -2000, 32767, -32768, 7};
  std::vector<std::int16_t> stereo;
  for (auto s : mono) {
    stereo.push_back(s);
    stereo.push_back(s);
  }
  const auto [info_m, clip_m] = parse_wav(pcm16_file(1, 16000, mono));
  const auto [info_s, clip_s] = parse_wav(pcm16_file(2, 16000, stereo));
  EXPECT_EQ(info_s.num_channels, 2);
  EXPECT_EQ(clip_s.samples, clip_m.samples);
}

TEST(WavParse, RifxMagicIsMalformed) {
  auto bytes = pcm16_file(1, 8000, {1, 2});
  bytes[3] = 'X';
  EXPECT_THROW(parse_wav(bytes), MalformedHeader);
}

TEST(WavParse, TruncatedDataChunk) {
  auto bytes = pcm16_file(1, 8000, {1, 2, 3, 4});
  bytes.resize(bytes.size() - 4);
  EXPECT_THROW(parse_wav(bytes), TruncatedData);
}

TEST(WavParse, TooShortForHeader) {
  std::vector<std::uint8_t> bytes = {'R', 'I', 'F', 'F'};
  EXPECT_THROW(parse_wav(bytes), MalformedHeader);
}

TEST(WavParse, UnsupportedBitDepth) {
  auto bytes = pcm16_file(1, 8000, {1, 2});
  bytes[34] = 8;  // bits per sample
  EXPECT_THROW(parse_wav(bytes), UnsupportedEncoding);
}

TEST(WavParse, SkipsUnknownChunks) {
  auto plain = pcm16_file(1, 8000, {5, -5});
  std::vector<std::uint8_t> bytes(plain.begin(), plain.begin() + 36);
  for (char c : std::string("LIST")) bytes.push_back(c);
  put_u32(bytes, 3);
  bytes.insert(bytes.end(), {1, 2, 3, 0});  // odd size plus pad byte
  bytes.insert(bytes.end(), plain.begin() + 36, plain.end());
  const auto [info, clip] = parse_wav(bytes);
  EXPECT_EQ(clip.samples, parse_wav(plain).second.samples);
}

TEST(WavRoundTrip, Pcm16WithinOneCode) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(1 + rng.below(500));
    for (double& s : clip.samples) s = rng.uniform(-1.0, 1.0);
    const auto decoded = parse_wav(encode_wav(clip)).second;
    ASSERT_EQ(decoded.samples.size(), clip.samples.size());
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
      EXPECT_LE(std::abs(decoded.samples[i] - clip.samples[i]), 1.0 / 32768.0);
    }
  }
}

TEST(WavRoundTrip, Float32IsExactForFloatValues) {
  AudioClip clip;
  clip.sample_rate = 22050;
  clip.samples = {0.25, -0.125, 0.75, -1.0};
  const auto decoded = parse_wav(encode_wav(clip, SampleFormat::IeeeFloat, 32)).second;
  EXPECT_EQ(decoded.samples, clip.samples);
}

TEST(Resample, RampHalvedRate) {
  AudioClip clip;
  clip.sample_rate = 4;
  clip.samples = {0, 1, 2, 3};
  const auto out = resample_linear(clip, 2);
  EXPECT_EQ(out.sample_rate, 2u);
  EXPECT_EQ(out.samples, (std::vector<double>{0, 2}));
}

TEST(Resample, SameRateIsIdentity) {
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples = {0.1, -0.2, 0.3};
  EXPECT_EQ(resample_linear(clip, 16000).samples, clip.samples);
}

TEST(Resample, OutputStaysWithinInputRange) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    AudioClip clip;
    clip.sample_rate = static_cast<std::uint32_t>(8000 + rng.below(40000));
    clip.samples.resize(2 + rng.below(300));
    for (double& s : clip.samples) s = rng.uniform(-1.0, 1.0);
    const auto target = static_cast<std::uint32_t>(8000 + rng.below(40000));
    const auto out = resample_linear(clip, target);
    const auto [lo, hi] = std::minmax_element(clip.samples.begin(), clip.samples.end());
    for (double v : out.samples) {
      EXPECT_GE(v, *lo);
      EXPECT_LE(v, *hi);
    }
  }
}

}  // namespace
