#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mfcm/ops.hpp"
#include "mfcm/rng.hpp"
#include "mfcm/tensor.hpp"

namespace mfcm {

struct InvertedResidualSpec {
  std::size_t in_channels = 8;
  std::size_t expansion_factor = 2;
  std::size_t out_channels = 8;
  std::size_t stride = 1;

  std::size_t hidden_channels() const { return in_channels * expansion_factor; }
  bool has_skip() const { return stride == 1 && in_channels == out_channels; }
  bool operator==(const InvertedResidualSpec&) const = default;
};

enum class MfcaVariant {
  // Low-order DCT statistics -> shared bottleneck -> per-channel band weights.
  Excitation,
  // Low-order DCT coefficients -> inverse DCT -> added to the band -> sigmoid.
  InverseDct,
};

struct MfcaConfig {
  bool enabled = true;
  std::size_t num_bands = 3;
  std::size_t dct_coeffs = 4;
  std::size_t reduction_ratio = 4;
  // Index of the backbone stage whose output is reweighted.
  std::size_t insert_after = 1;
  MfcaVariant variant = MfcaVariant::Excitation;

  bool operator==(const MfcaConfig&) const = default;
};

struct MfcmNetConfig {
  std::size_t input_channels = 3;
  std::size_t input_height = 224;
  std::size_t input_width = 224;
  std::size_t stem_channels = 8;
  std::vector<InvertedResidualSpec> stages = {{8, 2, 16, 2}, {16, 2, 16, 1}, {16, 2, 32, 2}};
  MfcaConfig mfca;
  // 0 means the pooled features feed the output logit directly.
  std::size_t head_hidden = 0;

  // The desk-scale reference network at a given input size.
  static MfcmNetConfig micro(std::size_t height = 96, std::size_t width = 96);

  std::size_t final_channels() const { return stages.empty() ? stem_channels : stages.back().out_channels; }
  // Throws ConfigInvalid.
  void validate() const;
  bool operator==(const MfcmNetConfig&) const = default;
};

struct BatchNormParams {
  Tensor gamma;
  Tensor beta;
  BatchNormStats stats;

  explicit BatchNormParams(std::size_t channels = 0);
};

struct ConvBnParams {
  Tensor weight;
  BatchNormParams bn;
};

struct InvertedResidualParams {
  ConvBnParams expand;
  ConvBnParams depthwise;
  ConvBnParams project;
};

struct MfcaParams {
  Tensor reduce_weight;  // (C*K) x hidden
  Tensor reduce_bias;    // hidden
  Tensor expand_weight;  // hidden x C
  Tensor expand_bias;    // C
};

struct HeadParams {
  Tensor hidden_weight;  // undefined when head_hidden == 0
  Tensor hidden_bias;
  Tensor out_weight;
  Tensor out_bias;
};

InvertedResidualParams init_inverted_residual(const InvertedResidualSpec& spec, Rng& rng);

// expand 1x1 -> BN -> ReLU6 -> depthwise 3x3 (stride) -> BN -> ReLU6 ->
// project 1x1 -> BN, plus the input when the skip connection is active.
Tensor inverted_residual_forward(Tape& tape, const Tensor& x, const InvertedResidualSpec& spec,
                                 InvertedResidualParams& params, NormMode mode);

// Rows per band when `height` rows are split into `bands` contiguous parts;
// the first (height % bands) parts get one extra row.
std::vector<std::size_t> band_heights(std::size_t height, std::size_t bands = 3);

// Splits N x C x H x W along H (the frequency axis). Throws BandTooThin when
// H is smaller than the band count.
std::vector<Tensor> split_bands(Tape& tape, const Tensor& features, std::size_t bands = 3);

// First k flat indices (row * width + col) of an h x w grid in JPEG zigzag
// order, starting at (0, 0). k is clipped to h * w.
std::vector<std::size_t> zigzag_indices(std::size_t height, std::size_t width, std::size_t k);

// N x C x h x w -> N x C x K: lowest-order orthonormal 2D DCT coefficients.
Tensor mfca_statistics(Tape& tape, const Tensor& band, std::size_t k);

struct MfcaOutput {
  Tensor attention;                 // N x C x H x W, entries in (0, 1)
  std::vector<Tensor> band_weights;  // per band N x C (Excitation variant only)
};

MfcaOutput mfca_attention(Tape& tape, const Tensor& features, const MfcaParams& params,
                          const MfcaConfig& cfg);

// Elementwise reweighting of the features by the attention map.
Tensor mfca_apply(Tape& tape, const Tensor& features, const Tensor& attention);

MfcaParams init_mfca(std::size_t channels, const MfcaConfig& cfg, Rng& rng);

enum class AttentionMode {
  Learned,
  ForceOnes,  // attention replaced by 1 everywhere
  Bypass,     // backbone only, MFCA skipped entirely
};

struct ForwardOptions {
  NormMode mode = NormMode::Eval;
  AttentionMode attention = AttentionMode::Learned;
};

struct ForwardTrace {
  std::vector<Tensor> stage_outputs;
  Tensor mfca_input;
  MfcaOutput mfca;
};

class MfcmNet {
 public:
  explicit MfcmNet(MfcmNetConfig config, std::uint64_t seed = Rng::kDefaultSeed);

  const MfcmNetConfig& config() const { return config_; }

  // N x C x H x W input -> N x 1 logits.
  Tensor forward(Tape& tape, const Tensor& input, const ForwardOptions& options = {},
                 ForwardTrace* trace = nullptr);

  // Trainable tensors followed by batch-norm running statistics, in the
  // fixed checkpoint order. The returned handles share storage with the model.
  std::vector<std::pair<std::string, Tensor>> named_tensors();
  std::vector<Tensor> parameters();
  std::size_t parameter_count();

  ConvBnParams stem;
  std::vector<InvertedResidualParams> blocks;
  MfcaParams mfca;
  HeadParams head;

 private:
  MfcmNetConfig config_;
};

}  // namespace mfcm
