#include "mfcm/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "mfcm/error.hpp"

namespace mfcm {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char (&tag)[5]) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char (&tag)[5]) {
  out.insert(out.end(), tag, tag + 4);
}

double decode_sample(std::span<const std::uint8_t> b, std::size_t at, const WavFormatInfo& fmt) {
  if (fmt.sample_format == SampleFormat::IeeeFloat) {
    const std::uint32_t bits = read_u32(b, at);
    return static_cast<double>(std::bit_cast<float>(bits));
  }
  if (fmt.bits_per_sample == 16) {
    return static_cast<double>(static_cast<std::int16_t>(read_u16(b, at))) / 32768.0;
  }
  return static_cast<double>(static_cast<std::int32_t>(read_u32(b, at))) / 2147483648.0;
}

}  // namespace

std::pair<WavFormatInfo, AudioClip> parse_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw MalformedHeader("missing RIFF/WAVE magic");
  }

  std::optional<WavFormatInfo> fmt;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;

    if (tag_is(bytes, pos, "fmt ")) {
      if (chunk_size < 16 || body + chunk_size > bytes.size()) {
        throw MalformedHeader("fmt chunk too short");
      }
      std::uint16_t format_tag = read_u16(bytes, body);
      WavFormatInfo info;
      info.num_channels = read_u16(bytes, body + 2);
      info.sample_rate = read_u32(bytes, body + 4);
      info.bits_per_sample = read_u16(bytes, body + 14);
      if (format_tag == kFormatExtensible) {
        // WAVE_FORMAT_EXTENSIBLE: the first two bytes of the sub-format GUID
        // carry the effective format code.
        if (chunk_size < 40) throw MalformedHeader("extensible fmt chunk too short");
        format_tag = read_u16(bytes, body + 24);
      }
      if (format_tag == kFormatPcm && (info.bits_per_sample == 16 || info.bits_per_sample == 32)) {
        info.sample_format = SampleFormat::PcmInteger;
      } else if (format_tag == kFormatFloat && info.bits_per_sample == 32) {
        info.sample_format = SampleFormat::IeeeFloat;
      } else {
        throw UnsupportedEncoding("format code " + std::to_string(format_tag) + " with " +
                                  std::to_string(info.bits_per_sample) + " bits per sample");
      }
      if (info.num_channels != 1 && info.num_channels != 2) {
        throw UnsupportedEncoding(std::to_string(info.num_channels) + " channels");
      }
      if (info.sample_rate == 0) throw MalformedHeader("sample rate is zero");
      fmt = info;
    } else if (tag_is(bytes, pos, "data")) {
      if (!fmt) throw MalformedHeader("data chunk precedes fmt chunk");
      const std::size_t frame_bytes =
          static_cast<std::size_t>(fmt->num_channels) * (fmt->bits_per_sample / 8);
      if (chunk_size % frame_bytes != 0) {
        throw MalformedHeader("data length is not a whole number of frames");
      }
      if (body + chunk_size > bytes.size()) {
        throw TruncatedData("data chunk declares " + std::to_string(chunk_size) + " bytes, " +
                            std::to_string(bytes.size() - body) + " present");
      }
      WavFormatInfo info = *fmt;
      info.num_frames = chunk_size / frame_bytes;
      if (info.num_frames == 0) throw TruncatedData("data chunk is empty");

      AudioClip clip;
      clip.sample_rate = info.sample_rate;
      clip.samples.resize(info.num_frames);
      const std::size_t sample_bytes = info.bits_per_sample / 8;
      for (std::size_t f = 0; f < info.num_frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < info.num_channels; ++c) {
          acc += decode_sample(bytes, body + f * frame_bytes + c * sample_bytes, info);
        }
        const double value = acc / info.num_channels;
        if (!std::isfinite(value)) throw MalformedHeader("non-finite float sample");
        clip.samples[f] = value;
      }
      return {info, std::move(clip)};
    }
    // Chunks are word aligned; odd sizes carry one pad byte.
    pos = body + chunk_size + (chunk_size & 1u);
  }
  if (!fmt) throw MalformedHeader("no fmt chunk");
  throw TruncatedData("no data chunk");
}

std::pair<WavFormatInfo, AudioClip> read_wav_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  auto result = parse_wav(bytes);
  result.second.source_path = path.string();
  return result;
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip, SampleFormat format,
                                     std::uint16_t bits_per_sample) {
  const bool is_float = format == SampleFormat::IeeeFloat;
  if (is_float ? bits_per_sample != 32 : (bits_per_sample != 16 && bits_per_sample != 32)) {
    throw UnsupportedEncoding("cannot encode " + std::to_string(bits_per_sample) + "-bit samples");
  }
  const std::uint32_t sample_bytes = bits_per_sample / 8u;
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * sample_bytes);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, is_float ? kFormatFloat : kFormatPcm);
  put_u16(out, 1);
  put_u32(out, clip.sample_rate);
  put_u32(out, clip.sample_rate * sample_bytes);
  put_u16(out, static_cast<std::uint16_t>(sample_bytes));
  put_u16(out, bits_per_sample);
  put_tag(out, "data");
  put_u32(out, data_bytes);

  for (double x : clip.samples) {
    if (is_float) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    } else if (bits_per_sample == 16) {
      const double code = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(code)));
    } else {
      const double code = std::clamp(std::round(x * 2147483648.0), -2147483648.0, 2147483647.0);
      put_u32(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(code)));
    }
  }
  return out;
}

void write_wav_file(const std::filesystem::path& path, const AudioClip& clip, SampleFormat format,
                    std::uint16_t bits_per_sample) {
  const auto bytes = encode_wav(clip, format, bits_per_sample);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AudioClip resample_linear(const AudioClip& clip, std::uint32_t target_rate) {
  if (target_rate == 0 || clip.sample_rate == 0) {
    throw std::invalid_argument("resample_linear: sample rates must be positive");
  }
  if (target_rate == clip.sample_rate) return clip;

  const std::uint64_t src = clip.sample_rate;
  const std::uint64_t dst = target_rate;
  const std::uint64_t n = clip.samples.size();
  const std::uint64_t out_len = (n * dst + src - 1) / src;

  AudioClip out;
  out.sample_rate = target_rate;
  out.source_path = clip.source_path;
  out.samples.resize(out_len);
  for (std::uint64_t j = 0; j < out_len; ++j) {
    // Source position j * src / dst, kept as an exact rational.
    const std::uint64_t idx = (j * src) / dst;
    const double frac = static_cast<double>((j * src) % dst) / static_cast<double>(dst);
    const double a = clip.samples[std::min(idx, n - 1)];
    const double b = clip.samples[std::min(idx + 1, n - 1)];
    out.samples[j] =
        frac == 0.0 ? a : std::clamp(a + frac * (b - a), std::min(a, b), std::max(a, b));
  }
  return out;
}

}  // namespace mfcm
