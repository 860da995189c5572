#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace mrinet {

/// splitmix64 step: advances `state` and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Independent sub-seed for stream `stream` of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// xoshiro256** seeded through splitmix64. Every sampler below documents its
/// draw count so sample streams are portable across implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();

  /// One draw: (next_u64() >> 11) * 2^-53, in [0, 1).
  double uniform();
  /// One draw.
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// One draw: true iff uniform() < p.
  bool bernoulli(double p) { return uniform() < p; }
  /// Two draws (Box-Muller cosine branch, no caching).
  double normal();
  /// One draw: floor(uniform() * n), n >= 1.
  std::size_t below(std::size_t n);

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// Fisher-Yates from the back; one draw per position.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace mrinet
