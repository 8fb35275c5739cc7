#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace petprep {

/// Philox-4x32-10 block: four 32-bit outputs from a 128-bit counter and 64-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a over the bytes of a string.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Uniform double in [0, 1) built from the top 53 bits of a word.
inline double to_unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/**
 * @brief Stateless random values addressed by (seed, counter).
 *
 * Every value is a pure function of its address, so results do not depend on
 * call order or thread count.
 */
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  /// Two independent 64-bit words for one counter value.
  [[nodiscard]] std::array<std::uint64_t, 2> words(std::uint64_t counter) const noexcept;

  /// Standard normal variate (Box-Muller, cosine branch).
  [[nodiscard]] double normal(std::uint64_t counter) const noexcept;

private:
  std::uint64_t seed_;
};

/// Sequential draws over a CounterRng; the n-th draw always yields the same value.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) noexcept : rng_(seed) {}

  std::uint64_t next_u64() noexcept { return rng_.words(counter_++)[0]; }
  /// Uniform in [0, 1).
  double uniform() noexcept { return to_unit_interval(next_u64()); }
  /// Uniform in [lo, hi]; returns lo when lo == hi.
  double uniform(double lo, double hi) noexcept;
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  [[nodiscard]] std::uint64_t draws() const noexcept { return counter_; }

private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

} // namespace petprep
