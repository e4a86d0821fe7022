#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfcm/rng.hpp"

namespace mfcm::testkit {

std::vector<std::complex<double>> reference_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  for (std::size_t k = 0; k < n; ++k) {
    long double re = 0.0L, im = 0.0L;
    for (std::size_t t = 0; t < n; ++t) {
      const long double angle = -two_pi * static_cast<long double>((k * t) % n) / static_cast<long double>(n);
      re += x[t] * std::cos(angle);
      im += x[t] * std::sin(angle);
    }
    out[k] = {static_cast<double>(re), static_cast<double>(im)};
  }
  return out;
}

std::vector<std::vector<double>> reference_mfcc(const std::vector<std::vector<double>>& mel,
                                                std::size_t num_coeffs) {
  std::vector<std::vector<double>> out;
  for (const auto& row : mel) {
    const double s_count = static_cast<double>(row.size());
    std::vector<double> c(num_coeffs, 0.0);
    for (std::size_t r = 0; r < num_coeffs; ++r) {
      for (std::size_t s = 0; s < row.size(); ++s) {
        c[r] += std::log(row[s]) * std::cos(std::numbers::pi * r * (s + 0.5) / s_count);
      }
    }
    out.push_back(c);
  }
  return out;
}

Tensor reference_conv2d(const Tensor& input, const Tensor& weight, std::size_t stride,
                        std::size_t padding) {
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t oc = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  // Materialise the zero-padded input.
  const std::size_t ph = h + 2 * padding, pw = w + 2 * padding;
  std::vector<double> padded(n * c * ph * pw, 0.0);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          padded[((b * c + ch) * ph + y + padding) * pw + x + padding] =
              input.data()[((b * c + ch) * h + y) * w + x];
  const std::size_t oh = (ph - kh) / stride + 1, ow = (pw - kw) / stride + 1;
  Tensor out(Shape{n, oc, oh, ow});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < oc; ++o)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
          double acc = 0.0;
          for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < kh; ++i)
              for (std::size_t j = 0; j < kw; ++j)
                acc += weight.data()[((o * c + ch) * kh + i) * kw + j] *
                       padded[((b * c + ch) * ph + y * stride + i) * pw + x * stride + j];
          out.data()[((b * oc + o) * oh + y) * ow + x] = acc;
        }
  return out;
}

Tensor random_tensor(Shape shape, std::uint64_t seed, double lo, double hi, bool requires_grad) {
  Rng rng(seed);
  Tensor t(std::move(shape), requires_grad);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace mfcm::testkit
