#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace liger {

// Seedable generator with a fixed, documented bit stream so fixtures can be
// reproduced in other languages:
//   engine    std::mt19937_64 constructed with the 64-bit seed
//   uniform   (next() >> 11) * 2^-53, in [0, 1)
//   index(n)  floor(uniform() * n), clamped to n - 1
// No std::*_distribution is used; their outputs differ across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t index(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Derives an independent stream seed for sub-task `stream`.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace liger
