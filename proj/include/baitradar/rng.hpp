#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace baitradar {

/// Seeded generator whose outputs are identical on every platform.
///
/// std::mt19937_64 is fully specified by the standard but the std
/// distributions are not, so the sampling helpers here are written out.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Derives an independent stream from a parent seed and a tag sequence.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1));
  }
  double normal(double mean = 0.0, double stddev = 1.0);
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to combine seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace baitradar
