#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace uscx {

// SplitMix64 step; used to decorrelate seed material before it reaches the engine.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d4a2f2d9b6f2ddULL;
  return z ^ (z >> 31);
}

/**
 * Deterministic random source.  Draw i of a Monte Carlo experiment uses
 * Rng(stream_seed(base_seed, i)), so results are reproducible for a given
 * base seed, independent of batching or thread count.
 *
 * Uniform variates are built from raw 64-bit engine output rather than
 * std::uniform_real_distribution, whose mapping is implementation-defined.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    // Expand the seed through SplitMix64 so nearby seeds give unrelated states.
    std::seed_seq seq{splitmix64(s), splitmix64(s), splitmix64(s), splitmix64(s)};
    engine_.seed(seq);
  }

  std::uint64_t bits() { return engine_(); }

  // Uniform on [0, 1); 53-bit resolution.
  double uniform01() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1); safe under log().
  double uniform01_open() {
    return (static_cast<double>(bits() >> 12) + 0.5) * 0x1.0p-52;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Standard exponential, strictly positive.
  double exponential() { return -std::log(uniform01_open()); }

  // Standard normal via Box-Muller; draws exactly two uniforms per call.
  double normal() {
    double u1 = uniform01_open();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Unit Frechet: 1/E for standard exponential E, so P[X <= x] = exp(-1/x).
  double unit_frechet() { return 1.0 / exponential(); }

  // Uniform on [0,1] u [2,3]: a fair coin picks the interval.
  double two_interval_uniform() {
    bool high = (bits() & 1ULL) != 0;
    double u = uniform01();
    return high ? 2.0 + u : u;
  }

 private:
  std::mt19937_64 engine_;
};

// Per-draw seed under the counter discipline: sample i uses base_seed + i.
inline std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t i) {
  return base_seed + i;
}

}  // namespace uscx
