#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mfcm/config.hpp"
#include "mfcm/model.hpp"

namespace mfcm {

// Checkpoint layout (little endian):
//   "MFCK" | version u8 (0x01) | u32 n | n bytes of JSON {"dsp": ..., "model": ...}
//   | u32 tensor count | per tensor: u32 name length, name bytes, MFCT tensor
// Tensors follow MfcmNet::named_tensors(): stem, blocks in order (expand,
// depthwise, project; weight, bn.gamma, bn.beta each), MFCA bottleneck,
// head, then every batch-norm running_mean / running_var in the same order.
inline constexpr std::uint8_t kCheckpointVersion = 0x01;

struct LoadedCheckpoint {
  DspConfig dsp;
  MfcmNet model;
};

std::vector<std::uint8_t> encode_checkpoint(MfcmNet& model, const DspConfig& dsp);
void save_checkpoint(const std::filesystem::path& path, MfcmNet& model, const DspConfig& dsp);

// Rebuilds the network from the embedded config and fills its tensors.
// Throws FormatError for a corrupt container and CheckpointMismatch when the
// stored tensors do not fit the stored architecture.
LoadedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mfcm
