#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfcm/tensor.hpp"

// Differentiable operations. Every op validates shapes (ShapeMismatch),
// checks its output for NaN/Inf (NumericalFault) and records a backward rule
// on the tape when an input requires a gradient.
namespace mfcm {

struct ConvSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t groups = 1;

  static ConvSpec pointwise(std::size_t in, std::size_t out) { return {in, out, 1, 1, 1, 0, 1}; }
  static ConvSpec depthwise(std::size_t channels, std::size_t kernel, std::size_t stride,
                            std::size_t padding) {
    return {channels, channels, kernel, kernel, stride, padding, channels};
  }
};

// Output extent floor((in + 2p - k) / stride) + 1.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding);

// Grouped cross-correlation. input N x C x H x W, weight C' x (C/groups) x kh x kw,
// optional bias C' (pass an undefined Tensor for none).
Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
              const ConvSpec& spec);

// conv2d with groups = C; weight must be C x 1 x kh x kw.
Tensor depthwise_conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
                        const ConvSpec& spec);

Tensor relu6(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);

enum class NormMode { Train, Eval };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

struct BatchNormStats {
  Tensor running_mean;  // C, starts at 0
  Tensor running_var;   // C, starts at 1

  explicit BatchNormStats(std::size_t channels = 0)
      : running_mean(Shape{channels}), running_var(Tensor::filled(Shape{channels}, 1.0)) {}
};

// Per-channel normalisation over (N, H, W). Train mode uses batch statistics
// and folds them into the running stats (running = 0.9*running + 0.1*batch,
// unbiased variance); eval mode uses the running stats.
Tensor batchnorm2d(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormStats& stats, NormMode mode);

// N x C x H x W -> N x C spatial mean.
Tensor global_avg_pool(Tape& tape, const Tensor& x);

// x N x F, weight F x G, bias G -> N x G.
Tensor dense(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias);

// Mean over the batch of max(z,0) - z*y + log(1 + exp(-|z|)).
Tensor bce_with_logits(Tape& tape, const Tensor& logits, const Tensor& labels);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
// Sum of all entries as a 1-element tensor.
Tensor sum(Tape& tape, const Tensor& x);

Tensor reshape(Tape& tape, const Tensor& x, Shape shape);
// Slice [start, start + length) along `axis`.
Tensor narrow(Tape& tape, const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);
// Concatenation along `axis`; all other extents must agree.
Tensor concat(Tape& tape, const std::vector<Tensor>& parts, std::size_t axis);

// N x C -> N x C x h x w, each weight repeated over the spatial extent.
Tensor broadcast_spatial(Tape& tape, const Tensor& weights, std::size_t height, std::size_t width);

// Orthonormal separable DCT-II (and its inverse, DCT-III) over the last two
// axes of a tensor of rank >= 2.
Tensor dct2d_ortho(Tape& tape, const Tensor& x);
Tensor idct2d_ortho(Tape& tape, const Tensor& x);

// Orthonormal DCT-II basis: row k is alpha_k * cos(pi * (2n + 1) * k / (2n_total)).
std::vector<double> dct_basis(std::size_t n);

// Picks entries of the flattened last two axes: (..., h, w) -> (..., K).
Tensor select_coefficients(Tape& tape, const Tensor& x, std::span<const std::size_t> flat_indices);
// Inverse scatter of select_coefficients with zero fill: (..., K) -> (..., h, w).
Tensor place_coefficients(Tape& tape, const Tensor& x, std::span<const std::size_t> flat_indices,
                          std::size_t height, std::size_t width);

}  // namespace mfcm
