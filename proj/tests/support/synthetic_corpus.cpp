#include "synthetic_corpus.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include <unistd.h>

#include "mfcm/manifest.hpp"
#include "mfcm/rng.hpp"

namespace mfcm::testkit {

AudioClip make_tone(std::uint64_t seed, std::size_t num_samples, std::uint32_t sample_rate) {
  Rng rng(seed);
  const double freq = rng.uniform(200.0, 2000.0);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(num_samples);
  for (std::size_t n = 0; n < num_samples; ++n) {
    clip.samples[n] = 0.5 * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(n) / sample_rate + phase);
  }
  return clip;
}

AudioClip make_am_noise(std::uint64_t seed, std::size_t num_samples, std::uint32_t sample_rate) {
  Rng rng(seed);
  const double mod = rng.uniform(2.0, 8.0);
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(num_samples);
  for (std::size_t n = 0; n < num_samples; ++n) {
    const double envelope = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * mod * static_cast<double>(n) / sample_rate);
    clip.samples[n] = 0.5 * envelope * rng.uniform(-1.0, 1.0);
  }
  return clip;
}

std::filesystem::path write_synthetic_corpus(const std::filesystem::path& root,
                                             const SyntheticCorpusSpec& spec) {
  std::uint64_t stream = spec.seed * 1000;
  for (Split split : kAllSplits) {
    const std::size_t count = split == Split::Training ? spec.train_per_class : spec.holdout_per_class;
    for (Label label : {Label::Real, Label::Fake}) {
      const auto dir = root / std::string(to_string(split)) / std::string(to_string(label));
      std::filesystem::create_directories(dir);
      for (std::size_t i = 0; i < count; ++i) {
        const AudioClip clip = label == Label::Real
                                   ? make_tone(++stream, spec.num_samples, spec.sample_rate)
                                   : make_am_noise(++stream, spec.num_samples, spec.sample_rate);
        char name[16];
        std::snprintf(name, sizeof(name), "%03zu.wav", i);
        write_wav_file(dir / name, clip);
      }
    }
  }
  return root;
}

std::filesystem::path scratch_dir(const std::string& name) {
  // Tests run as parallel processes, so the pid keeps directories apart.
  const auto dir = std::filesystem::temp_directory_path() /
                   ("mfcm_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mfcm::testkit
