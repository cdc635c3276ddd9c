#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace fmh {

/// SplitMix64: a counter-based 64-bit generator. Output i is a bijective mix
/// of `seed + i * golden_gamma`, so independent streams come from distinct
/// seeds and a run's draws never depend on thread scheduling.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal variate (Box-Muller, one draw per call).
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// A child stream: deterministic in (seed, stream id), independent of draws so far.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t stream_id) noexcept {
    SplitMix64 mixer(seed ^ (0xD1B54A32D192ED03ULL * (stream_id + 1)));
    return SplitMix64(mixer());
  }

 private:
  std::uint64_t state_;
};

}  // namespace fmh
