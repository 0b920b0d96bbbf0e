#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace csmusic {

// SplitMix64 (Steele/Lea/Flood): a counter-based 64-bit generator. The state
// advances by a fixed odd increment and every output is a bijective mix of the
// counter, so any draw is reproducible from (seed, draw index) alone.
//
// Stream splitting rule: a child stream's seed is obtained by folding the
// stream ids into the parent seed left to right, seed <- mix(seed ^ (id + c))
// with c the SplitMix64 increment, then one final mix. Chaining makes the
// fold order-sensitive (ids (1,2) and (2,1) land on different streams) and
// the offset keeps id 0 from degenerating into a no-op. Disjoint id tuples
// give statistically independent streams; the same tuple always gives the
// same stream regardless of how many workers run or in which order.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform on (0, 1]; never returns 0 so log() is always safe.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the paired draw is cached.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform integer in [0, bound) by rejection; bound must be positive.
  int next_below(int bound) {
    const std::uint64_t b = static_cast<std::uint64_t>(bound);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % b;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<int>(x % b);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace detail

// Derive a child stream seed from a parent seed and stream ids (see the
// splitting rule above).
template <typename... Ids>
std::uint64_t derive_stream(std::uint64_t seed, Ids... ids) {
  ((seed = detail::mix64(seed ^ (static_cast<std::uint64_t>(ids) +
                                 0x9e3779b97f4a7c15ull))),
   ...);
  return detail::mix64(seed);
}

}  // namespace csmusic
