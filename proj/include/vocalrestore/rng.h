#pragma once

#include <cstdint>
#include <string_view>

namespace vr {

// Counter-based generator: draw n of stream `key` is splitmix64's finalizer
// applied to key + (n + 1) * 0x9E3779B97F4A7C15. The whole state is
// (key, counter), so sequences are identical on every platform and any draw
// can be recomputed from its position.
class CounterRng {
 public:
  explicit CounterRng(uint64_t key = 0) : key_(key) {}

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }

  uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  uint64_t below(uint64_t n);
  // Standard normal via Box-Muller (two uniforms per draw, second value dropped).
  double normal();

  // Independent stream for a named purpose; does not advance this generator.
  CounterRng derive(std::string_view tag) const;
  CounterRng derive(uint64_t index) const;

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

uint64_t splitmix64_mix(uint64_t z);

}  // namespace vr
