#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mfcm/error.hpp"

namespace mfcm {

template <typename T>
using Spectrum = std::vector<std::complex<T>>;

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Direct O(N^2) evaluation of X[k] = sum_n x[n] exp(-2*pi*i*k*n/N).
// Twiddles are tabulated in double precision and indexed by (k*n) mod N so
// the argument never loses precision; accumulation happens in T.
template <typename T>
Spectrum<T> dft_naive(std::span<const T> frame) {
  const std::size_t n = frame.size();
  Spectrum<T> out(n);
  if (n == 0) return out;
  std::vector<std::complex<T>> twiddle(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
    twiddle[m] = std::complex<T>(static_cast<T>(std::cos(angle)), static_cast<T>(std::sin(angle)));
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<T> acc{};
    std::size_t idx = 0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += frame[t] * twiddle[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    out[k] = acc;
  }
  return out;
}

// Iterative radix-2 decimation-in-time transform for a fixed length.
// A plan is immutable after construction and may be shared across threads.
template <typename T>
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    if (!is_power_of_two(n)) {
      throw NonPowerOfTwoLength("fft length " + std::to_string(n) + " is not a power of two");
    }
    bitrev_.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      bitrev_[i] = r;
    }
    twiddle_.resize(n / 2);
    for (std::size_t m = 0; m < n / 2; ++m) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
      twiddle_[m] = std::complex<T>(static_cast<T>(std::cos(angle)), static_cast<T>(std::sin(angle)));
    }
  }

  std::size_t size() const { return n_; }

  Spectrum<T> forward(std::span<const T> frame) const {
    if (frame.size() != n_) {
      throw NonPowerOfTwoLength("fft plan of length " + std::to_string(n_) + " given " +
                                std::to_string(frame.size()) + " samples");
    }
    Spectrum<T> x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[bitrev_[i]] = std::complex<T>(frame[i], T{0});
    transform(x);
    return x;
  }

 private:
  // In-place butterflies over bit-reversed input.
  void transform(Spectrum<T>& x) const {
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const std::complex<T> w = twiddle_[j * step];
          const std::complex<T> u = x[start + j];
          const std::complex<T> b = x[start + j + half];
          // Written out to avoid the NaN-recovery path of complex operator*.
          const std::complex<T> v(b.real() * w.real() - b.imag() * w.imag(),
                                  b.real() * w.imag() + b.imag() * w.real());
          x[start + j] = u + v;
          x[start + j + half] = u - v;
        }
      }
    }
  }

  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<T>> twiddle_;
};

template <typename T>
Spectrum<T> fft(std::span<const T> frame) {
  return FftPlan<T>(frame.size()).forward(frame);
}

}  // namespace mfcm
