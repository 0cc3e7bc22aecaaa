#pragma once

#include <cstdint>
#include <random>

namespace dociiw {

/// Seeded generator with portable distributions. The standard library's
/// distribution objects are implementation-defined, so samples are derived
/// from raw engine bits instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for item `index` of a run seeded with `master`.
  static Rng derive(std::uint64_t master, std::uint64_t index);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : static_cast<std::uint64_t>(uniform() * n) % n; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace dociiw
