#pragma once

#include <cmath>
#include <cstdint>

namespace biphoton {

// Deterministic splittable random stream (splitmix64 core).
//
// Every random draw in the library flows from one top-level seed. Independent
// consumers derive their own stream by mixing a distinct stream id into the
// seed, so adding or reordering one consumer never perturbs the draws seen by
// another and whole runs replay bit for bit from (seed, stream id) alone.
class SplitStream {
 public:
  SplitStream(std::uint64_t seed, std::uint64_t stream)
      : state_(mix(mix(seed + kGamma) + (stream + 1) * kGamma)) {}

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  // Uniform double in [0, 1) with 53 significant bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Exponential inter-arrival time for a process of the given rate (> 0).
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Normal deviate via Box-Muller; the spare draw is cached.
  double normal(double mean, double sigma) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + sigma * spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return mean + sigma * r * std::cos(a);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace biphoton
