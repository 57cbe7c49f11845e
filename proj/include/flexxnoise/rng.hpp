#pragma once

#include <cmath>
#include <cstdint>

#include "flexxnoise/types.hpp"

namespace flexxnoise {

/// Counter-based, splittable random number generator.
///
/// Every output is a pure function of (seed, stream path, counter), so draws
/// can be assigned to frames, rows, and pixels independently and the result
/// does not depend on evaluation order or thread count. The core mix is the
/// SplitMix64 finalizer over an additive Weyl sequence.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix64(seed + kGamma)) {}

  /// Derive an independent child generator for a sub-stream (frame index,
  /// pixel index, ...). Children of distinct ids are decorrelated; the
  /// parent is unaffected.
  CounterRng stream(std::uint64_t id) const {
    CounterRng child(*this);
    child.key_ = mix64(key_ ^ mix64(id + kGamma));
    child.counter_ = 0;
    return child;
  }

  std::uint64_t next_u64() { return mix64(key_ + ++counter_ * kGamma); }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log() argument.
  double next_unit_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal draw via Box-Muller (cosine branch). Consumes exactly
  /// two counter steps, so skip-ahead arithmetic stays trivial.
  double next_normal() {
    const double u1 = next_unit_open();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace flexxnoise
