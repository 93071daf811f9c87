#include "vocalrestore/fft.h"

#include <cmath>
#include <numbers>
#include <utility>

namespace vr {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

FftPlan::FftPlan(std::size_t n) : n_(n), pow2_(is_power_of_two(n)) {
  const std::size_t tw = pow2_ ? n / 2 : n;
  twiddle_.resize(tw);
  for (std::size_t k = 0; k < tw; ++k) {
    double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddle_[k] = {std::cos(a), std::sin(a)};
  }
  if (pow2_) {
    bitrev_.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      bitrev_[i] = r;
    }
  }
}

void FftPlan::forward(std::span<std::complex<double>> data) const {
  transform(data, false);
}

void FftPlan::inverse(std::span<std::complex<double>> data) const {
  transform(data, true);
}

void FftPlan::transform(std::span<std::complex<double>> data, bool inverse) const {
  const std::size_t n = n_;
  if (n <= 1) return;
  if (!pow2_) {
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> acc{};
      for (std::size_t m = 0; m < n; ++m) {
        auto w = twiddle_[(k * m) % n];
        acc += data[m] * (inverse ? std::conj(w) : w);
      }
      out[k] = acc;
    }
    std::copy(out.begin(), out.end(), data.begin());
    return;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        auto w = twiddle_[j * step];
        if (inverse) w = std::conj(w);
        auto u = data[start + j];
        auto v = data[start + j + half] * w;
        data[start + j] = u + v;
        data[start + j + half] = u - v;
      }
    }
  }
}

}  // namespace vr
