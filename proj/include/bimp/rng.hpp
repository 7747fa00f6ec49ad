#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bimp {

/// Independent random streams used by one simulated path.
enum class StreamRole : std::uint64_t {
  Parameter = 1,
  Brownian = 2,
  Impulse = 3,
  Terminal = 4,
};

/// Counter-based generator: draw number c of stream (seed, path, role) is a
/// pure function of those four integers (SplitMix64 finalizer applied to a
/// keyed counter), so paths can be generated in any order on any thread.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t path, StreamRole role)
      : key_(mix(mix(seed ^ 0x243F6A8885A308D3ULL) ^ (path * 0x9E3779B97F4A7C15ULL)) ^
             (static_cast<std::uint64_t>(role) * 0xD1B54A32D192ED03ULL)) {}

  std::uint64_t next_u64() { return mix(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by Box–Muller (cosine branch only; two uniforms per draw).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const noexcept { return counter_; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace bimp
