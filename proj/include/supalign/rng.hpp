#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace supalign {

/// Deterministic counter-based random stream (splitmix64 over a 64-bit key).
///
/// A stream is a (seed, counter) pair, so copies replay the same sequence.
/// `derive` produces statistically independent child streams keyed by a
/// label or an index; use one child per concurrent task rather than sharing
/// a stream between threads.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0) noexcept : seed_(seed), state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    state_ += kGolden;
    return mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes two draws per call.
  double normal() noexcept;

  /// Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  RngStream derive(std::string_view label) const noexcept;
  RngStream derive(std::uint64_t index) const noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace supalign
