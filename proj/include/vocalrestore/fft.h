#pragma once

#include <complex>
#include <span>
#include <vector>

namespace vr {

// Complex DFT of a fixed length. Power-of-two lengths use an iterative
// radix-2 transform; any other length falls back to direct O(n^2) summation.
// The plan is immutable after construction and may be shared across threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }

  // In place. Forward uses exp(-2*pi*i*k*m/n); inverse is unscaled.
  void forward(std::span<std::complex<double>> data) const;
  void inverse(std::span<std::complex<double>> data) const;

 private:
  void transform(std::span<std::complex<double>> data, bool inverse) const;

  std::size_t n_;
  bool pow2_;
  std::vector<std::complex<double>> twiddle_;  // exp(-2*pi*i*k/n), k < n/2 (or n)
  std::vector<std::size_t> bitrev_;
};

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

}  // namespace vr
