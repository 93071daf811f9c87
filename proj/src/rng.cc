#include "vocalrestore/rng.h"

#include <cmath>
#include <numbers>

namespace vr {

namespace {
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;
}

uint64_t splitmix64_mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

uint64_t CounterRng::next_u64() {
  ++counter_;
  return splitmix64_mix(key_ + counter_ * kGolden);
}

double CounterRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t CounterRng::below(uint64_t n) {
  if (n <= 1) return 0;
  // Rejection keeps the draw exactly uniform.
  const uint64_t limit = (~uint64_t{0}) - (~uint64_t{0}) % n;
  uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double CounterRng::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

CounterRng CounterRng::derive(std::string_view tag) const {
  // FNV-1a over the tag, then mixed with the parent key.
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return CounterRng(splitmix64_mix(key_ ^ splitmix64_mix(h)));
}

CounterRng CounterRng::derive(uint64_t index) const {
  return CounterRng(splitmix64_mix(key_ ^ splitmix64_mix(index + kGolden)));
}

}  // namespace vr
