#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "cmvn/error.hpp"

namespace cmvn {

// Counter-based pseudo-random source. Draw k of a generator seeded with s is
// splitmix64(s + k·γ), so every value is a pure function of (seed, draw index)
// and streams can be split off without shared state.
class SeededGenerator {
 public:
  explicit SeededGenerator(std::uint64_t seed = 0) noexcept : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t draws() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept { return mix(seed_ + kGamma * ++counter_); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Box-Muller; consumes exactly two draws.
  double normal() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential() noexcept { return -std::log(uniform_open()); }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Uniform integer in [0, n) by rejection, so there is no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw DomainError("SeededGenerator::below: empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Independent child stream; the parent is not advanced.
  SeededGenerator split(std::uint64_t stream) const noexcept {
    return SeededGenerator(mix(seed_ ^ mix(stream + kGamma)));
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace cmvn
