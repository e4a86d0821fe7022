#include "mfcm/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "mfcm/error.hpp"

namespace mfcm {
namespace {

using Index = std::ptrdiff_t;

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeMismatch(what);
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* name) {
  require(t.defined() && t.rank() == rank, std::string(op) + ": " + name + " must have rank " +
                                               std::to_string(rank) +
                                               (t.defined() ? ", got " + shape_to_string(t.shape())
                                                            : std::string(", got undefined")));
}

struct ConvGeometry {
  std::size_t batch, in_c, in_h, in_w;
  std::size_t out_c, out_h, out_w;
  std::size_t kh, kw, stride, pad;
  std::size_t in_per_group, out_per_group;
};

// Output positions o with 0 <= o*stride + offset < extent, as [lo, hi).
void valid_span(Index offset, Index stride, Index extent, Index out_extent, Index& lo, Index& hi) {
  lo = offset >= 0 ? 0 : (-offset + stride - 1) / stride;
  const Index last = extent - 1 - offset;
  hi = last < 0 ? 0 : std::min(out_extent, last / stride + 1);
  if (hi < lo) hi = lo;
}

// Calls fn(n, oc, ic, w_index, in_row, out_row, lo, hi, off_w) for every
// contributing (output row, input row) pair; all three conv passes share it.
template <typename Fn>
void for_each_conv_row(const ConvGeometry& g, Fn&& fn) {
  const Index stride = static_cast<Index>(g.stride);
  const Index pad = static_cast<Index>(g.pad);
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t oc = 0; oc < g.out_c; ++oc) {
      const std::size_t group = oc / g.out_per_group;
      for (std::size_t icl = 0; icl < g.in_per_group; ++icl) {
        const std::size_t ic = group * g.in_per_group + icl;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          Index oh_lo, oh_hi;
          valid_span(static_cast<Index>(ky) - pad, stride, static_cast<Index>(g.in_h),
                     static_cast<Index>(g.out_h), oh_lo, oh_hi);
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const Index off_w = static_cast<Index>(kx) - pad;
            Index ow_lo, ow_hi;
            valid_span(off_w, stride, static_cast<Index>(g.in_w), static_cast<Index>(g.out_w),
                       ow_lo, ow_hi);
            if (ow_lo >= ow_hi) continue;
            const std::size_t w_index = ((oc * g.in_per_group + icl) * g.kh + ky) * g.kw + kx;
            for (Index oh = oh_lo; oh < oh_hi; ++oh) {
              const Index ih = oh * stride + static_cast<Index>(ky) - pad;
              const std::size_t in_row = ((n * g.in_c + ic) * g.in_h + static_cast<std::size_t>(ih)) * g.in_w;
              const std::size_t out_row =
                  ((n * g.out_c + oc) * g.out_h + static_cast<std::size_t>(oh)) * g.out_w;
              fn(w_index, in_row, out_row, ow_lo, ow_hi, off_w);
            }
          }
        }
      }
    }
  }
}

// Dims split around `axis`: outer x extent x inner.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// out = L * X * R for every trailing h x w map, with L h x h and R w x w.
void sandwich(std::span<const double> x, std::span<double> out, std::size_t maps, std::size_t h,
              std::size_t w, const std::vector<double>& left, const std::vector<double>& right) {
  std::vector<double> tmp(h * w);
  for (std::size_t m = 0; m < maps; ++m) {
    const double* src = x.data() + m * h * w;
    double* dst = out.data() + m * h * w;
    std::fill(tmp.begin(), tmp.end(), 0.0);
    for (std::size_t k = 0; k < h; ++k) {
      for (std::size_t i = 0; i < h; ++i) {
        const double l = left[k * h + i];
        for (std::size_t j = 0; j < w; ++j) tmp[k * w + j] += l * src[i * w + j];
      }
    }
    for (std::size_t k = 0; k < h; ++k) {
      for (std::size_t l = 0; l < w; ++l) {
        double acc = 0.0;
        for (std::size_t j = 0; j < w; ++j) acc += tmp[k * w + j] * right[j * w + l];
        dst[k * w + l] = acc;
      }
    }
  }
}

std::vector<double> transposed(const std::vector<double>& m, std::size_t n) {
  std::vector<double> t(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) t[j * n + i] = m[i * n + j];
  return t;
}

// Shared body of dct2d_ortho / idct2d_ortho: out = L X R, grad = L^T G R^T.
Tensor separable_transform(Tape& tape, const Tensor& x, bool inverse, const char* op) {
  require(x.defined() && x.rank() >= 2, std::string(op) + ": rank must be >= 2");
  const std::size_t h = x.dim(x.rank() - 2);
  const std::size_t w = x.dim(x.rank() - 1);
  const std::size_t maps = x.numel() / (h * w);
  const auto bh = dct_basis(h);
  const auto bw = dct_basis(w);
  // Forward DCT: B_h X B_w^T. Inverse: B_h^T Y B_w.
  auto left = inverse ? transposed(bh, h) : bh;
  auto right = inverse ? bw : transposed(bw, w);

  Tensor out(x.shape());
  sandwich(x.data(), out.data(), maps, h, w, left, right);
  check_finite(out, op);
  tape.record(out, {x}, [x, out, maps, h, w, left = transposed(left, h),
                         right = transposed(right, w)]() mutable {
    if (!x.requires_grad()) return;
    std::vector<double> g(x.numel());
    sandwich(out.grad(), g, maps, h, w, left, right);
    auto gx = x.grad();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
  return out;
}

}  // namespace

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
  require(stride >= 1, "conv stride must be >= 1");
  require(in + 2 * padding >= kernel, "conv kernel larger than padded input");
  return (in + 2 * padding - kernel) / stride + 1;
}

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
              const ConvSpec& spec) {
  require_rank(input, 4, "conv2d", "input");
  require_rank(weight, 4, "conv2d", "weight");
  require(spec.groups >= 1 && spec.in_channels % spec.groups == 0 &&
              spec.out_channels % spec.groups == 0,
          "conv2d: groups must divide both channel counts");
  require(input.dim(1) == spec.in_channels,
          "conv2d: input has " + std::to_string(input.dim(1)) + " channels, spec expects " +
              std::to_string(spec.in_channels));
  const Shape expected_w{spec.out_channels, spec.in_channels / spec.groups, spec.kernel_h,
                         spec.kernel_w};
  require(weight.shape() == expected_w, "conv2d: weight " + shape_to_string(weight.shape()) +
                                            ", expected " + shape_to_string(expected_w));
  if (bias.defined()) {
    require(bias.shape() == Shape{spec.out_channels}, "conv2d: bias must have out_channels entries");
  }

  ConvGeometry g{};
  g.batch = input.dim(0);
  g.in_c = spec.in_channels;
  g.in_h = input.dim(2);
  g.in_w = input.dim(3);
  g.out_c = spec.out_channels;
  g.kh = spec.kernel_h;
  g.kw = spec.kernel_w;
  g.stride = spec.stride;
  g.pad = spec.padding;
  g.out_h = conv_output_extent(g.in_h, g.kh, g.stride, g.pad);
  g.out_w = conv_output_extent(g.in_w, g.kw, g.stride, g.pad);
  g.in_per_group = spec.in_channels / spec.groups;
  g.out_per_group = spec.out_channels / spec.groups;

  Tensor out(Shape{g.batch, g.out_c, g.out_h, g.out_w});
  {
    auto y = out.data();
    const auto x = input.data();
    const auto wt = weight.data();
    if (bias.defined()) {
      const auto b = bias.data();
      const std::size_t plane = g.out_h * g.out_w;
      for (std::size_t n = 0; n < g.batch; ++n)
        for (std::size_t oc = 0; oc < g.out_c; ++oc)
          std::fill_n(y.begin() + static_cast<Index>((n * g.out_c + oc) * plane), plane, b[oc]);
    }
    const Index stride = static_cast<Index>(g.stride);
    for_each_conv_row(g, [&](std::size_t wi, std::size_t in_row, std::size_t out_row, Index lo,
                             Index hi, Index off_w) {
      const double wv = wt[wi];
      const double* src = x.data() + in_row;
      double* dst = y.data() + out_row;
      for (Index ow = lo; ow < hi; ++ow) dst[ow] += wv * src[ow * stride + off_w];
    });
  }
  check_finite(out, "conv2d");

  tape.record(out, {input, weight, bias}, [input, weight, bias, out, g]() mutable {
    const auto gy = out.grad();
    const Index stride = static_cast<Index>(g.stride);
    if (input.requires_grad()) {
      auto gx = input.grad();
      const auto wt = weight.data();
      for_each_conv_row(g, [&](std::size_t wi, std::size_t in_row, std::size_t out_row, Index lo,
                               Index hi, Index off_w) {
        const double wv = wt[wi];
        double* dst = gx.data() + in_row;
        const double* src = gy.data() + out_row;
        for (Index ow = lo; ow < hi; ++ow) dst[ow * stride + off_w] += wv * src[ow];
      });
    }
    if (weight.requires_grad()) {
      auto gw = weight.grad();
      const auto x = input.data();
      for_each_conv_row(g, [&](std::size_t wi, std::size_t in_row, std::size_t out_row, Index lo,
                               Index hi, Index off_w) {
        const double* xs = x.data() + in_row;
        const double* ys = gy.data() + out_row;
        double acc = 0.0;
        for (Index ow = lo; ow < hi; ++ow) acc += ys[ow] * xs[ow * stride + off_w];
        gw[wi] += acc;
      });
    }
    if (bias.defined() && bias.requires_grad()) {
      auto gb = bias.grad();
      const std::size_t plane = g.out_h * g.out_w;
      for (std::size_t n = 0; n < g.batch; ++n)
        for (std::size_t oc = 0; oc < g.out_c; ++oc) {
          const double* src = gy.data() + (n * g.out_c + oc) * plane;
          double acc = 0.0;
          for (std::size_t i = 0; i < plane; ++i) acc += src[i];
          gb[oc] += acc;
        }
    }
  });
  return out;
}

Tensor depthwise_conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
                        const ConvSpec& spec) {
  require(spec.groups == spec.in_channels && spec.in_channels == spec.out_channels,
          "depthwise_conv2d: spec must have groups = in_channels = out_channels");
  require_rank(weight, 4, "depthwise_conv2d", "weight");
  require(weight.dim(1) == 1, "depthwise_conv2d: weight must be C x 1 x kh x kw");
  return conv2d(tape, input, weight, bias, spec);
}

Tensor relu6(Tape& tape, const Tensor& x) {
  Tensor out(x.shape());
  const auto xs = x.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = std::min(std::max(xs[i], 0.0), 6.0);
  check_finite(out, "relu6");
  tape.record(out, {x}, [x, out]() mutable {
    const auto xs = x.data();
    const auto gy = out.grad();
    auto gx = x.grad();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i] > 0.0 && xs[i] < 6.0) gx[i] += gy[i];
    }
  });
  return out;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  Tensor out(x.shape());
  const auto xs = x.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = stable_sigmoid(xs[i]);
  check_finite(out, "sigmoid");
  tape.record(out, {x}, [x, out]() mutable {
    const auto ys = out.data();
    const auto gy = out.grad();
    auto gx = x.grad();
    for (std::size_t i = 0; i < ys.size(); ++i) gx[i] += gy[i] * ys[i] * (1.0 - ys[i]);
  });
  return out;
}

Tensor batchnorm2d(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormStats& stats, NormMode mode) {
  require_rank(x, 4, "batchnorm2d", "input");
  const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  const Shape per_channel{c};
  require(gamma.shape() == per_channel && beta.shape() == per_channel &&
              stats.running_mean.shape() == per_channel && stats.running_var.shape() == per_channel,
          "batchnorm2d: parameters must have one entry per channel");
  const std::size_t count = n * plane;
  require(count > 0, "batchnorm2d: empty input");

  std::vector<double> mean(c), inv_std(c);
  const auto xs = x.data();
  if (mode == NormMode::Train) {
    auto rm = stats.running_mean.data();
    auto rv = stats.running_var.data();
    for (std::size_t ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* p = xs.data() + (b * c + ch) * plane;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* p = xs.data() + (b * c + ch) * plane;
        for (std::size_t i = 0; i < plane; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      const double var = ss / static_cast<double>(count);
      mean[ch] = mu;
      inv_std[ch] = 1.0 / std::sqrt(var + kBatchNormEps);
      const double unbiased = count > 1 ? ss / static_cast<double>(count - 1) : var;
      rm[ch] = kBatchNormMomentum * rm[ch] + (1.0 - kBatchNormMomentum) * mu;
      rv[ch] = kBatchNormMomentum * rv[ch] + (1.0 - kBatchNormMomentum) * unbiased;
    }
  } else {
    const auto rm = stats.running_mean.data();
    const auto rv = stats.running_var.data();
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = rm[ch];
      inv_std[ch] = 1.0 / std::sqrt(rv[ch] + kBatchNormEps);
    }
  }

  Tensor out(x.shape());
  std::vector<double> xhat(x.numel());
  {
    auto ys = out.data();
    const auto gm = gamma.data();
    const auto bt = beta.data();
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t base = (b * c + ch) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double h = (xs[base + i] - mean[ch]) * inv_std[ch];
          xhat[base + i] = h;
          ys[base + i] = gm[ch] * h + bt[ch];
        }
      }
  }
  check_finite(out, "batchnorm2d");

  tape.record(out, {x, gamma, beta},
              [x, gamma, beta, out, xhat = std::move(xhat), inv_std = std::move(inv_std), n, c,
               plane, count, mode]() mutable {
                const auto gy = out.grad();
                const auto gm = gamma.data();
                std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
                for (std::size_t b = 0; b < n; ++b)
                  for (std::size_t ch = 0; ch < c; ++ch) {
                    const std::size_t base = (b * c + ch) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                      sum_dy[ch] += gy[base + i];
                      sum_dy_xhat[ch] += gy[base + i] * xhat[base + i];
                    }
                  }
                if (gamma.requires_grad()) {
                  auto gg = gamma.grad();
                  for (std::size_t ch = 0; ch < c; ++ch) gg[ch] += sum_dy_xhat[ch];
                }
                if (beta.requires_grad()) {
                  auto gb = beta.grad();
                  for (std::size_t ch = 0; ch < c; ++ch) gb[ch] += sum_dy[ch];
                }
                if (!x.requires_grad()) return;
                auto gx = x.grad();
                const double m = static_cast<double>(count);
                for (std::size_t b = 0; b < n; ++b)
                  for (std::size_t ch = 0; ch < c; ++ch) {
                    const std::size_t base = (b * c + ch) * plane;
                    const double scale = gm[ch] * inv_std[ch];
                    for (std::size_t i = 0; i < plane; ++i) {
                      if (mode == NormMode::Train) {
                        // Batch statistics depend on x; project out their directions.
                        gx[base + i] += scale * (gy[base + i] - sum_dy[ch] / m -
                                                 xhat[base + i] * sum_dy_xhat[ch] / m);
                      } else {
                        gx[base + i] += scale * gy[base + i];
                      }
                    }
                  }
              });
  return out;
}

Tensor global_avg_pool(Tape& tape, const Tensor& x) {
  require_rank(x, 4, "global_avg_pool", "input");
  const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  Tensor out(Shape{n, c});
  const auto xs = x.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < n * c; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < plane; ++j) s += xs[i * plane + j];
    ys[i] = s / static_cast<double>(plane);
  }
  check_finite(out, "global_avg_pool");
  tape.record(out, {x}, [x, out, n, c, plane]() mutable {
    const auto gy = out.grad();
    auto gx = x.grad();
    for (std::size_t i = 0; i < n * c; ++i) {
      const double g = gy[i] / static_cast<double>(plane);
      for (std::size_t j = 0; j < plane; ++j) gx[i * plane + j] += g;
    }
  });
  return out;
}

Tensor dense(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "dense", "input");
  require_rank(weight, 2, "dense", "weight");
  const std::size_t n = x.dim(0), f = x.dim(1), g = weight.dim(1);
  require(weight.dim(0) == f, "dense: input " + shape_to_string(x.shape()) + " vs weight " +
                                  shape_to_string(weight.shape()));
  if (bias.defined()) require(bias.shape() == Shape{g}, "dense: bias must have G entries");

  Tensor out(Shape{n, g});
  {
    const auto xs = x.data();
    const auto ws = weight.data();
    auto ys = out.data();
    for (std::size_t r = 0; r < n; ++r) {
      double* row = ys.data() + r * g;
      if (bias.defined()) std::copy(bias.data().begin(), bias.data().end(), row);
      for (std::size_t k = 0; k < f; ++k) {
        const double xv = xs[r * f + k];
        const double* wrow = ws.data() + k * g;
        for (std::size_t j = 0; j < g; ++j) row[j] += xv * wrow[j];
      }
    }
  }
  check_finite(out, "dense");
  tape.record(out, {x, weight, bias}, [x, weight, bias, out, n, f, g]() mutable {
    const auto gy = out.grad();
    if (x.requires_grad()) {
      auto gx = x.grad();
      const auto ws = weight.data();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < f; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < g; ++j) acc += gy[r * g + j] * ws[k * g + j];
          gx[r * f + k] += acc;
        }
    }
    if (weight.requires_grad()) {
      auto gw = weight.grad();
      const auto xs = x.data();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < f; ++k) {
          const double xv = xs[r * f + k];
          for (std::size_t j = 0; j < g; ++j) gw[k * g + j] += xv * gy[r * g + j];
        }
    }
    if (bias.defined() && bias.requires_grad()) {
      auto gb = bias.grad();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < g; ++j) gb[j] += gy[r * g + j];
    }
  });
  return out;
}

Tensor bce_with_logits(Tape& tape, const Tensor& logits, const Tensor& labels) {
  require(logits.defined() && labels.defined() && logits.numel() == labels.numel() &&
              logits.numel() > 0,
          "bce_with_logits: logits and labels must have the same non-zero size");
  const auto z = logits.data();
  const auto y = labels.data();
  const double count = static_cast<double>(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    total += std::max(z[i], 0.0) - z[i] * y[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  Tensor out = Tensor::scalar(total / count);
  check_finite(out, "bce_with_logits");
  tape.record(out, {logits}, [logits, labels, out, count]() mutable {
    const double gy = out.grad()[0];
    const auto z = logits.data();
    const auto y = labels.data();
    auto gz = logits.grad();
    for (std::size_t i = 0; i < z.size(); ++i) gz[i] += gy * (stable_sigmoid(z[i]) - y[i]) / count;
  });
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add: shapes " + shape_to_string(a.shape()) + " and " +
                                      shape_to_string(b.shape()) + " differ");
  Tensor out(a.shape());
  const auto as = a.data();
  const auto bs = b.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = as[i] + bs[i];
  check_finite(out, "add");
  tape.record(out, {a, b}, [a, b, out]() mutable {
    const auto gy = out.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
    }
  });
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "mul: shapes " + shape_to_string(a.shape()) + " and " +
                                      shape_to_string(b.shape()) + " differ");
  Tensor out(a.shape());
  const auto as = a.data();
  const auto bs = b.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = as[i] * bs[i];
  check_finite(out, "mul");
  tape.record(out, {a, b}, [a, b, out]() mutable {
    const auto gy = out.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      const auto bs = b.data();
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bs[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      const auto as = a.data();
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * as[i];
    }
  });
  return out;
}

Tensor sum(Tape& tape, const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor out = Tensor::scalar(total);
  check_finite(out, "sum");
  tape.record(out, {x}, [x, out]() mutable {
    const double gy = out.grad()[0];
    for (double& g : x.grad()) g += gy;
  });
  return out;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  require(shape_numel(shape) == x.numel(), "reshape: cannot view " + shape_to_string(x.shape()) +
                                               " as " + shape_to_string(shape));
  Tensor out(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
  tape.record(out, {x}, [x, out]() mutable {
    const auto gy = out.grad();
    auto gx = x.grad();
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
  });
  return out;
}

Tensor narrow(Tape& tape, const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  require(axis < x.rank() && start + length <= x.dim(axis) && length > 0,
          "narrow: slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
              ") out of range on axis " + std::to_string(axis) + " of " + shape_to_string(x.shape()));
  const AxisSplit s = split_at(x.shape(), axis);
  Shape shape = x.shape();
  shape[axis] = length;
  Tensor out(shape);
  const auto xs = x.data();
  auto ys = out.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(xs.begin() + static_cast<Index>((o * s.extent + start) * s.inner), length * s.inner,
                ys.begin() + static_cast<Index>(o * length * s.inner));
  }
  tape.record(out, {x}, [x, out, s, start, length]() mutable {
    const auto gy = out.grad();
    auto gx = x.grad();
    for (std::size_t o = 0; o < s.outer; ++o) {
      const double* src = gy.data() + o * length * s.inner;
      double* dst = gx.data() + (o * s.extent + start) * s.inner;
      for (std::size_t i = 0; i < length * s.inner; ++i) dst[i] += src[i];
    }
  });
  return out;
}

Tensor concat(Tape& tape, const std::vector<Tensor>& parts, std::size_t axis) {
  require(!parts.empty(), "concat: no inputs");
  const Shape& ref = parts.front().shape();
  require(axis < ref.size(), "concat: axis out of range");
  std::size_t total = 0;
  for (const auto& p : parts) {
    bool same = p.rank() == ref.size();
    for (std::size_t i = 0; same && i < ref.size(); ++i) same = i == axis || p.dim(i) == ref[i];
    require(same, "concat: incompatible part " + shape_to_string(p.shape()));
    total += p.dim(axis);
  }
  Shape shape = ref;
  shape[axis] = total;
  Tensor out(shape);
  const AxisSplit s = split_at(shape, axis);
  auto ys = out.data();
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t len = p.dim(axis);
    const auto xs = p.data();
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(xs.begin() + static_cast<Index>(o * len * s.inner), len * s.inner,
                  ys.begin() + static_cast<Index>((o * total + offset) * s.inner));
    }
    offset += len;
  }
  tape.record(out, parts, [parts, out, s, total, axis]() mutable {
    const auto gy = out.grad();
    std::size_t offset = 0;
    for (auto& p : parts) {
      const std::size_t len = p.dim(axis);
      if (p.requires_grad()) {
        auto gx = p.grad();
        for (std::size_t o = 0; o < s.outer; ++o) {
          const double* src = gy.data() + (o * total + offset) * s.inner;
          double* dst = gx.data() + o * len * s.inner;
          for (std::size_t i = 0; i < len * s.inner; ++i) dst[i] += src[i];
        }
      }
      offset += len;
    }
  });
  return out;
}

Tensor broadcast_spatial(Tape& tape, const Tensor& weights, std::size_t height, std::size_t width) {
  require_rank(weights, 2, "broadcast_spatial", "weights");
  const std::size_t n = weights.dim(0), c = weights.dim(1), plane = height * width;
  Tensor out(Shape{n, c, height, width});
  const auto ws = weights.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < n * c; ++i) {
    std::fill_n(ys.begin() + static_cast<Index>(i * plane), plane, ws[i]);
  }
  tape.record(out, {weights}, [weights, out, n, c, plane]() mutable {
    const auto gy = out.grad();
    auto gw = weights.grad();
    for (std::size_t i = 0; i < n * c; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < plane; ++j) acc += gy[i * plane + j];
      gw[i] += acc;
    }
  });
  return out;
}

std::vector<double> dct_basis(std::size_t n) {
  std::vector<double> b(n * n);
  const double a0 = std::sqrt(1.0 / static_cast<double>(n));
  const double ak = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      b[k * n + i] = (k == 0 ? a0 : ak) *
                     std::cos(std::numbers::pi * static_cast<double>((2 * i + 1) * k) /
                              static_cast<double>(2 * n));
    }
  }
  return b;
}

Tensor dct2d_ortho(Tape& tape, const Tensor& x) { return separable_transform(tape, x, false, "dct2d_ortho"); }

Tensor idct2d_ortho(Tape& tape, const Tensor& x) { return separable_transform(tape, x, true, "idct2d_ortho"); }

Tensor select_coefficients(Tape& tape, const Tensor& x, std::span<const std::size_t> flat_indices) {
  require(x.defined() && x.rank() >= 2, "select_coefficients: rank must be >= 2");
  const std::size_t inner = x.dim(x.rank() - 2) * x.dim(x.rank() - 1);
  for (auto idx : flat_indices) require(idx < inner, "select_coefficients: index out of range");
  const std::size_t outer = x.numel() / inner;
  const std::size_t k = flat_indices.size();
  Shape shape(x.shape().begin(), x.shape().end() - 2);
  shape.push_back(k);
  Tensor out(shape);
  const auto xs = x.data();
  auto ys = out.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < k; ++j) ys[o * k + j] = xs[o * inner + flat_indices[j]];
  std::vector<std::size_t> idx(flat_indices.begin(), flat_indices.end());
  tape.record(out, {x}, [x, out, idx = std::move(idx), outer, inner]() mutable {
    const auto gy = out.grad();
    auto gx = x.grad();
    const std::size_t k = idx.size();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t j = 0; j < k; ++j) gx[o * inner + idx[j]] += gy[o * k + j];
  });
  return out;
}

Tensor place_coefficients(Tape& tape, const Tensor& x, std::span<const std::size_t> flat_indices,
                          std::size_t height, std::size_t width) {
  require(x.defined() && x.rank() >= 1 && x.dim(x.rank() - 1) == flat_indices.size(),
          "place_coefficients: last axis must match the index count");
  const std::size_t inner = height * width;
  for (auto idx : flat_indices) require(idx < inner, "place_coefficients: index out of range");
  const std::size_t k = flat_indices.size();
  const std::size_t outer = x.numel() / k;
  Shape shape(x.shape().begin(), x.shape().end() - 1);
  shape.push_back(height);
  shape.push_back(width);
  Tensor out(shape);
  const auto xs = x.data();
  auto ys = out.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < k; ++j) ys[o * inner + flat_indices[j]] += xs[o * k + j];
  std::vector<std::size_t> idx(flat_indices.begin(), flat_indices.end());
  tape.record(out, {x}, [x, out, idx = std::move(idx), outer, inner]() mutable {
    const auto gy = out.grad();
    auto gx = x.grad();
    const std::size_t k = idx.size();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t j = 0; j < k; ++j) gx[o * k + j] += gy[o * inner + idx[j]];
  });
  return out;
}

}  // namespace mfcm
