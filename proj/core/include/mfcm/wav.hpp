#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mfcm {

// Decoded mono audio. Amplitudes are unit-scaled, i.e. within [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  std::uint32_t sample_rate = 0;
  std::optional<std::string> source_path;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return sample_rate == 0 ? 0.0 : static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class SampleFormat : std::uint8_t { PcmInteger, IeeeFloat };

struct WavFormatInfo {
  std::uint16_t num_channels = 0;
  std::uint16_t bits_per_sample = 0;
  SampleFormat sample_format = SampleFormat::PcmInteger;
  std::uint32_t sample_rate = 0;
  std::size_t num_frames = 0;
};

// Decodes a complete RIFF/WAVE file image. Supports PCM-16, PCM-32 and
// IEEE float-32 with one or two channels; stereo is mixed down by the
// arithmetic mean. Unknown chunks are skipped.
//
// Throws MalformedHeader, UnsupportedEncoding or TruncatedData.
std::pair<WavFormatInfo, AudioClip> parse_wav(std::span<const std::uint8_t> bytes);

// Reads and parses a file; throws IoError when the file cannot be read.
std::pair<WavFormatInfo, AudioClip> read_wav_file(const std::filesystem::path& path);

// Canonical 44-byte-header encoder used for fixtures and synthetic corpora.
// PCM amplitudes are rounded to the nearest code and clamped to range.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip,
                                     SampleFormat format = SampleFormat::PcmInteger,
                                     std::uint16_t bits_per_sample = 16);

void write_wav_file(const std::filesystem::path& path, const AudioClip& clip,
                    SampleFormat format = SampleFormat::PcmInteger,
                    std::uint16_t bits_per_sample = 16);

// Linear interpolation onto a new uniform grid. Output length is
// ceil(n * target / source); a same-rate call returns the input unchanged.
AudioClip resample_linear(const AudioClip& clip, std::uint32_t target_rate);

}  // namespace mfcm
