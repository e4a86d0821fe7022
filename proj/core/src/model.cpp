#include "mfcm/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfcm/error.hpp"

namespace mfcm {
namespace {

// Kaiming-uniform over fan-in: U(-sqrt(6 / fan_in), sqrt(6 / fan_in)).
Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape), true);
  const double bound = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

ConvBnParams init_conv_bn(Shape weight_shape, Rng& rng) {
  const std::size_t out_channels = weight_shape[0];
  const std::size_t fan_in = weight_shape[1] * weight_shape[2] * weight_shape[3];
  return ConvBnParams{kaiming_uniform(std::move(weight_shape), fan_in, rng),
                      BatchNormParams(out_channels)};
}

Tensor conv_bn(Tape& tape, const Tensor& x, ConvBnParams& p, const ConvSpec& spec, NormMode mode,
               bool activate) {
  Tensor y = spec.groups > 1 ? depthwise_conv2d(tape, x, p.weight, Tensor{}, spec)
                             : conv2d(tape, x, p.weight, Tensor{}, spec);
  y = batchnorm2d(tape, y, p.bn.gamma, p.bn.beta, p.bn.stats, mode);
  return activate ? relu6(tape, y) : y;
}

std::size_t bottleneck_width(std::size_t channels, std::size_t ratio) {
  return std::max<std::size_t>(1, channels / std::max<std::size_t>(1, ratio));
}

void invalid(const std::string& what) { throw ConfigInvalid("model config: " + what); }

}  // namespace

BatchNormParams::BatchNormParams(std::size_t channels)
    : gamma(Tensor::filled(Shape{channels}, 1.0, true)),
      beta(Shape{channels}, true),
      stats(channels) {}

MfcmNetConfig MfcmNetConfig::micro(std::size_t height, std::size_t width) {
  MfcmNetConfig cfg;
  cfg.input_height = height;
  cfg.input_width = width;
  return cfg;
}

void MfcmNetConfig::validate() const {
  if (input_channels == 0 || input_height < 3 || input_width < 3) invalid("input shape too small");
  if (stem_channels == 0) invalid("stem_channels must be positive");
  if (stages.empty()) invalid("at least one stage is required");
  std::size_t channels = stem_channels;
  bool downsamples = false;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    if (s.in_channels != channels) {
      invalid("stage " + std::to_string(i) + " expects " + std::to_string(s.in_channels) +
              " channels but receives " + std::to_string(channels));
    }
    if (s.stride != 1 && s.stride != 2) invalid("stage stride must be 1 or 2");
    if (s.expansion_factor == 0 || s.out_channels == 0) invalid("stage widths must be positive");
    downsamples = downsamples || s.stride == 2;
    channels = s.out_channels;
  }
  if (!downsamples) invalid("at least one stride-2 stage is required");
  if (mfca.num_bands != 3) invalid("mfca.num_bands must be 3");
  if (mfca.dct_coeffs == 0) invalid("mfca.dct_coeffs must be >= 1");
  if (mfca.reduction_ratio == 0) invalid("mfca.reduction_ratio must be >= 1");
  if (mfca.insert_after >= stages.size()) invalid("mfca.insert_after is past the last stage");
}

InvertedResidualParams init_inverted_residual(const InvertedResidualSpec& spec, Rng& rng) {
  const std::size_t hidden = spec.hidden_channels();
  InvertedResidualParams p;
  p.expand = init_conv_bn(Shape{hidden, spec.in_channels, 1, 1}, rng);
  p.depthwise = init_conv_bn(Shape{hidden, 1, 3, 3}, rng);
  p.project = init_conv_bn(Shape{spec.out_channels, hidden, 1, 1}, rng);
  return p;
}

Tensor inverted_residual_forward(Tape& tape, const Tensor& x, const InvertedResidualSpec& spec,
                                 InvertedResidualParams& params, NormMode mode) {
  if (x.rank() != 4 || x.dim(1) != spec.in_channels) {
    throw ShapeMismatch("inverted residual expects " + std::to_string(spec.in_channels) +
                        " channels, got " + shape_to_string(x.shape()));
  }
  const std::size_t hidden = spec.hidden_channels();
  Tensor h = conv_bn(tape, x, params.expand, ConvSpec::pointwise(spec.in_channels, hidden), mode, true);
  h = conv_bn(tape, h, params.depthwise, ConvSpec::depthwise(hidden, 3, spec.stride, 1), mode, true);
  h = conv_bn(tape, h, params.project, ConvSpec::pointwise(hidden, spec.out_channels), mode, false);
  return spec.has_skip() ? add(tape, x, h) : h;
}

std::vector<std::size_t> band_heights(std::size_t height, std::size_t bands) {
  if (height < bands) {
    throw BandTooThin("cannot split " + std::to_string(height) + " frequency rows into " +
                      std::to_string(bands) + " bands");
  }
  std::vector<std::size_t> rows(bands, height / bands);
  for (std::size_t b = 0; b < height % bands; ++b) ++rows[b];
  return rows;
}

std::vector<Tensor> split_bands(Tape& tape, const Tensor& features, std::size_t bands) {
  if (features.rank() != 4) throw ShapeMismatch("split_bands expects N x C x H x W");
  std::vector<Tensor> out;
  std::size_t start = 0;
  for (std::size_t rows : band_heights(features.dim(2), bands)) {
    out.push_back(narrow(tape, features, 2, start, rows));
    start += rows;
  }
  return out;
}

std::vector<std::size_t> zigzag_indices(std::size_t height, std::size_t width, std::size_t k) {
  k = std::min(k, height * width);
  std::vector<std::size_t> order;
  order.reserve(k);
  for (std::size_t diag = 0; order.size() < k && diag + 1 < height + width; ++diag) {
    const std::size_t row_lo = diag >= width ? diag - width + 1 : 0;
    const std::size_t row_hi = std::min(diag, height - 1);
    for (std::size_t step = 0; step <= row_hi - row_lo && order.size() < k; ++step) {
      // Even diagonals run bottom-left to top-right, odd ones the reverse.
      const std::size_t row = diag % 2 == 0 ? row_hi - step : row_lo + step;
      order.push_back(row * width + (diag - row));
    }
  }
  return order;
}

Tensor mfca_statistics(Tape& tape, const Tensor& band, std::size_t k) {
  if (band.rank() != 4) throw ShapeMismatch("mfca_statistics expects N x C x h x w");
  const auto idx = zigzag_indices(band.dim(2), band.dim(3), k);
  return select_coefficients(tape, dct2d_ortho(tape, band), idx);
}

MfcaParams init_mfca(std::size_t channels, const MfcaConfig& cfg, Rng& rng) {
  MfcaParams p;
  if (cfg.variant != MfcaVariant::Excitation) return p;
  const std::size_t in = channels * cfg.dct_coeffs;
  const std::size_t hidden = bottleneck_width(channels, cfg.reduction_ratio);
  p.reduce_weight = kaiming_uniform(Shape{in, hidden}, in, rng);
  p.reduce_bias = Tensor(Shape{hidden}, true);
  p.expand_weight = kaiming_uniform(Shape{hidden, channels}, hidden, rng);
  p.expand_bias = Tensor(Shape{channels}, true);
  return p;
}

MfcaOutput mfca_attention(Tape& tape, const Tensor& features, const MfcaParams& params,
                          const MfcaConfig& cfg) {
  const auto bands = split_bands(tape, features, cfg.num_bands);
  const std::size_t n = features.dim(0);
  const std::size_t c = features.dim(1);
  MfcaOutput out;
  std::vector<Tensor> maps;
  for (const auto& band : bands) {
    const std::size_t h = band.dim(2);
    const std::size_t w = band.dim(3);
    if (cfg.variant == MfcaVariant::InverseDct) {
      const auto idx = zigzag_indices(h, w, cfg.dct_coeffs);
      Tensor low = place_coefficients(tape, mfca_statistics(tape, band, cfg.dct_coeffs), idx, h, w);
      maps.push_back(sigmoid(tape, add(tape, band, idct2d_ortho(tape, low))));
      continue;
    }
    Tensor stats = mfca_statistics(tape, band, cfg.dct_coeffs);
    if (stats.dim(2) < cfg.dct_coeffs) {
      // Bands with fewer than K coefficients contribute zeros for the rest.
      stats = concat(tape, {stats, Tensor(Shape{n, c, cfg.dct_coeffs - stats.dim(2)})}, 2);
    }
    Tensor z = reshape(tape, stats, Shape{n, c * cfg.dct_coeffs});
    z = relu6(tape, dense(tape, z, params.reduce_weight, params.reduce_bias));
    Tensor weights = sigmoid(tape, dense(tape, z, params.expand_weight, params.expand_bias));
    out.band_weights.push_back(weights);
    maps.push_back(broadcast_spatial(tape, weights, h, w));
  }
  out.attention = concat(tape, maps, 2);
  return out;
}

Tensor mfca_apply(Tape& tape, const Tensor& features, const Tensor& attention) {
  return mul(tape, features, attention);
}

MfcmNet::MfcmNet(MfcmNetConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  stem = init_conv_bn(Shape{config_.stem_channels, config_.input_channels, 3, 3}, rng);
  for (const auto& spec : config_.stages) blocks.push_back(init_inverted_residual(spec, rng));
  if (config_.mfca.enabled) {
    mfca = init_mfca(config_.stages[config_.mfca.insert_after].out_channels, config_.mfca, rng);
  }
  const std::size_t features = config_.final_channels();
  std::size_t head_in = features;
  if (config_.head_hidden > 0) {
    head.hidden_weight = kaiming_uniform(Shape{features, config_.head_hidden}, features, rng);
    head.hidden_bias = Tensor(Shape{config_.head_hidden}, true);
    head_in = config_.head_hidden;
  }
  head.out_weight = kaiming_uniform(Shape{head_in, 1}, head_in, rng);
  head.out_bias = Tensor(Shape{1}, true);
}

Tensor MfcmNet::forward(Tape& tape, const Tensor& input, const ForwardOptions& options,
                        ForwardTrace* trace) {
  const Shape expected{config_.input_channels, config_.input_height, config_.input_width};
  if (input.rank() != 4 || !std::equal(expected.begin(), expected.end(), input.shape().begin() + 1)) {
    throw ShapeMismatch("model expects N x " + shape_to_string(expected) + " input, got " +
                        shape_to_string(input.shape()));
  }
  const NormMode mode = options.mode;
  Tensor x = conv_bn(tape, input, stem, ConvSpec{config_.input_channels, config_.stem_channels, 3, 3, 2, 1, 1},
                     mode, true);
  const bool use_mfca = config_.mfca.enabled && options.attention != AttentionMode::Bypass;
  for (std::size_t i = 0; i < config_.stages.size(); ++i) {
    x = inverted_residual_forward(tape, x, config_.stages[i], blocks[i], mode);
    if (use_mfca && i == config_.mfca.insert_after) {
      if (trace) trace->mfca_input = x;
      if (options.attention == AttentionMode::ForceOnes) {
        x = mfca_apply(tape, x, Tensor::filled(x.shape(), 1.0));
      } else {
        MfcaOutput att = mfca_attention(tape, x, mfca, config_.mfca);
        x = mfca_apply(tape, x, att.attention);
        if (trace) trace->mfca = std::move(att);
      }
    }
    if (trace) trace->stage_outputs.push_back(x);
  }
  Tensor pooled = global_avg_pool(tape, x);
  if (config_.head_hidden > 0) {
    pooled = relu6(tape, dense(tape, pooled, head.hidden_weight, head.hidden_bias));
  }
  return dense(tape, pooled, head.out_weight, head.out_bias);
}

std::vector<std::pair<std::string, Tensor>> MfcmNet::named_tensors() {
  std::vector<std::pair<std::string, Tensor>> params;
  std::vector<std::pair<std::string, Tensor>> buffers;
  const auto add_conv_bn = [&](const std::string& prefix, ConvBnParams& p) {
    params.emplace_back(prefix + ".weight", p.weight);
    params.emplace_back(prefix + ".bn.gamma", p.bn.gamma);
    params.emplace_back(prefix + ".bn.beta", p.bn.beta);
    buffers.emplace_back(prefix + ".bn.running_mean", p.bn.stats.running_mean);
    buffers.emplace_back(prefix + ".bn.running_var", p.bn.stats.running_var);
  };
  add_conv_bn("stem", stem);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string prefix = "blocks." + std::to_string(i);
    add_conv_bn(prefix + ".expand", blocks[i].expand);
    add_conv_bn(prefix + ".depthwise", blocks[i].depthwise);
    add_conv_bn(prefix + ".project", blocks[i].project);
  }
  const auto add_if = [&](const std::string& name, const Tensor& t) {
    if (t.defined()) params.emplace_back(name, t);
  };
  add_if("mfca.reduce_weight", mfca.reduce_weight);
  add_if("mfca.reduce_bias", mfca.reduce_bias);
  add_if("mfca.expand_weight", mfca.expand_weight);
  add_if("mfca.expand_bias", mfca.expand_bias);
  add_if("head.hidden_weight", head.hidden_weight);
  add_if("head.hidden_bias", head.hidden_bias);
  add_if("head.out_weight", head.out_weight);
  add_if("head.out_bias", head.out_bias);
  params.insert(params.end(), buffers.begin(), buffers.end());
  return params;
}

std::vector<Tensor> MfcmNet::parameters() {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_tensors()) {
    if (t.requires_grad()) out.push_back(t);
  }
  return out;
}

std::size_t MfcmNet::parameter_count() {
  std::size_t n = 0;
  for (const auto& t : parameters()) n += t.numel();
  return n;
}

}  // namespace mfcm
