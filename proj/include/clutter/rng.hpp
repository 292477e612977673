#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace clutter {

std::uint64_t splitmix64(std::uint64_t& state);

// xoshiro256** seeded through SplitMix64. Distributions are implemented here
// rather than with <random> so sequences are identical across standard
// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  // Independent substream keyed by (this generator's seed, stream id); does
  // not advance this generator.
  Rng split(std::uint64_t stream_id) const;

  std::uint64_t seed() const { return seed_; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

// Mixes two 64-bit values into one seed; used to derive per-unit seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id);

}  // namespace clutter
