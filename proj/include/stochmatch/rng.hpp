#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace stochmatch {

/// Seedable generator with counter-derived substreams.
///
/// The engine is std::mt19937_64; its output sequence is fixed by the C++
/// standard, and all conversions to doubles and bounded integers below are
/// done here rather than through the implementation-defined std
/// distributions, so a (seed, stream) pair reproduces bit-for-bit across
/// standard libraries. Trial `t` of an experiment seeded with `s` uses
/// `Rng(s, t)`.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(mix(mix(seed) ^ (0x9E3779B97F4A7C15ULL * (stream + 1)))) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on {0, ..., bound - 1}; bound > 0.
  std::uint64_t uniform_int(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % bound;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Index drawn with the given weights; returns weights.size() for the
  /// leftover mass when the weights sum to less than one. With `exhaustive`
  /// the weights are taken to sum to one and round-off never yields the
  /// leftover outcome.
  std::size_t categorical(std::span<const double> weights, bool exhaustive = false) {
    double u = uniform();
    std::size_t last_positive = weights.size();
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (weights[k] > 0.0) last_positive = k;
      if (u < weights[k]) return k;
      u -= weights[k];
    }
    return exhaustive ? last_positive : weights.size();
  }

  /// SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace stochmatch
