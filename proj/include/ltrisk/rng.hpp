#pragma once

#include <cmath>
#include <cstdint>

namespace ltrisk {

/// SplitMix64 finalizer. Used to derive independent stream keys from
/// (seed, index, ...) tuples so that per-subject and per-replicate
/// randomness does not depend on scheduling.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) {
  return mix64(mix64(seed) ^ (a * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                    std::uint64_t c) {
  return derive_seed(derive_seed(seed, a, b), c);
}

/// Counter-based stream: the i-th draw is mix64(key + i * gamma). Cheap to
/// construct per subject, which is the point.
class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t next() {
    return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Poisson(1) draw by inversion; used for order-free bootstrap counts.
  int poisson1() {
    double u = uniform();
    double term = std::exp(-1.0);
    double cdf = term;
    int k = 0;
    while (u >= cdf && k < 20) {
      ++k;
      term /= k;
      cdf += term;
    }
    return k;
  }

  std::uint64_t below(std::uint64_t bound) {
    // Lemire-style rejection would be overkill for the bounds used here.
    return next() % bound;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// UniformRandomBitGenerator adapter so std::shuffle can use a stream.
class StreamUrbg {
 public:
  using result_type = std::uint64_t;
  explicit StreamUrbg(std::uint64_t key) : s_(key) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return s_.next(); }

 private:
  CounterStream s_;
};

}  // namespace ltrisk
